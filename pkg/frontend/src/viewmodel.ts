// Pure console state. Every number on screen is copied out of a gateway
// response; these functions only rearrange them for display.

import type {
    CommitResponse,
    GenreDiff,
    PreviewResponse,
    RecommendationsResponse,
    SummaryResponse,
} from './types';

export type Arrow = 'up' | 'down' | 'flat';

export interface DisplayRow {
    rank: number;
    item: number;
    title: string;
    genres: string[];
    arrow: Arrow;
    delta: number;
}

export interface GenreGauge {
    genre: string;
    before: number;
    after: number;
    delta: number;
}

export interface ConsoleState {
    user: number | null;
    activeText: string;
    activeVersion: number;
    breadcrumb: number; // committed versions so far
    draftText: string;
    alpha: number;
    guidance: string;
    guidanceMode: 'more' | 'less';
    rows: DisplayRow[];
    gauges: GenreGauge[];
    banner: string | null;
}

export function initialState(): ConsoleState {
    return {
        user: null,
        activeText: '',
        activeVersion: -1,
        breadcrumb: 0,
        draftText: '',
        alpha: 0.5,
        guidance: '',
        guidanceMode: 'more',
        rows: [],
        gauges: [],
        banner: null,
    };
}

export function isDirty(state: ConsoleState): boolean {
    return state.draftText !== state.activeText;
}

export function canCommit(state: ConsoleState): boolean {
    return isDirty(state) && state.draftText.trim().length > 0;
}

// Slider endpoints name their meaning; anything between shows the number.
export function alphaLabel(alpha: number): string {
    if (alpha === 0) return 'history only';
    if (alpha === 1) return 'summary only';
    return `mixed (α = ${alpha.toFixed(2)})`;
}

export function arrowFor(delta: number): Arrow {
    if (delta > 0) return 'up';
    if (delta < 0) return 'down';
    return 'flat';
}

export function arrowGlyph(arrow: Arrow): string {
    return arrow === 'up' ? '↑' : arrow === 'down' ? '↓' : '–';
}

export function applySummary(state: ConsoleState, response: SummaryResponse): ConsoleState {
    return {
        ...state,
        user: response.user,
        activeText: response.text,
        activeVersion: response.version,
        breadcrumb: response.history_length,
        draftText: response.text,
        banner: null,
    };
}

export function applyPreview(state: ConsoleState, response: PreviewResponse): ConsoleState {
    const deltas = new Map(response.diff.items.map((d) => [d.item, d.delta]));
    const rows = response.ranking.map((entry) => {
        const delta = deltas.get(entry.item) ?? 0;
        return {
            rank: entry.rank,
            item: entry.item,
            title: entry.title,
            genres: entry.genres,
            arrow: arrowFor(delta),
            delta,
        };
    });
    return { ...state, rows, gauges: gaugesFrom(response.diff.genres), banner: null };
}

export function applyRecommendations(state: ConsoleState,
                                     response: RecommendationsResponse): ConsoleState {
    const rows = response.items.map((entry) => ({
        rank: entry.rank,
        item: entry.item,
        title: entry.title,
        genres: entry.genres,
        arrow: 'flat' as Arrow,
        delta: 0,
    }));
    return { ...state, rows, banner: null };
}

export function applyCommit(state: ConsoleState, response: CommitResponse): ConsoleState {
    return {
        ...state,
        activeText: response.text,
        activeVersion: response.version,
        draftText: response.text,
        breadcrumb: state.breadcrumb + 1,
        banner: null,
    };
}

export function applyError(state: ConsoleState, message: string): ConsoleState {
    // editor state survives failures; only the banner changes
    return { ...state, banner: message };
}

export function renderedOrder(state: ConsoleState): number[] {
    return state.rows.map((row) => row.item);
}

export function guidanceModeParam(state: ConsoleState): 'positive' | 'negative' {
    return state.guidanceMode === 'more' ? 'positive' : 'negative';
}

function gaugesFrom(genres: GenreDiff[]): GenreGauge[] {
    return genres.map((g) => ({
        genre: g.genre,
        before: g.before,
        after: g.after,
        delta: g.delta,
    }));
}
