// DOM wiring: binds the view model to the page and the gateway client.
// All state transitions go through the pure functions in viewmodel.ts so
// tests can drive the exact same logic headlessly.

import { GatewayClient, GatewayError } from './api';
import { createPreviewScheduler } from './debounce';
import {
    ConsoleState,
    alphaLabel,
    applyCommit,
    applyError,
    applyPreview,
    applyRecommendations,
    applySummary,
    arrowGlyph,
    canCommit,
    guidanceModeParam,
    initialState,
    isDirty,
    renderedOrder,
} from './viewmodel';

export interface ConsoleApp {
    state: () => ConsoleState;
    loadUser(user: number): Promise<void>;
    setAlpha(alpha: number): Promise<void>;
    setDraft(text: string): void;
    commit(): Promise<void>;
    applyGuidance(): Promise<void>;
    refresh(): Promise<void>;
    renderedOrder(): number[];
}

interface Elements {
    editor: HTMLTextAreaElement;
    dirtyBadge: HTMLElement;
    breadcrumb: HTMLElement;
    alphaSlider: HTMLInputElement;
    alphaValue: HTMLElement;
    guidanceInput: HTMLInputElement;
    guidanceMode: HTMLSelectElement;
    guidanceApply: HTMLButtonElement;
    commitButton: HTMLButtonElement;
    userInput: HTMLInputElement;
    userLoad: HTMLButtonElement;
    list: HTMLElement;
    gauges: HTMLElement;
    banner: HTMLElement;
}

function grab(doc: Document): Elements {
    const byId = <T extends HTMLElement>(id: string): T => {
        const el = doc.getElementById(id);
        if (!el) throw new Error(`missing element #${id}`);
        return el as T;
    };
    return {
        editor: byId<HTMLTextAreaElement>('summary-editor'),
        dirtyBadge: byId('dirty-badge'),
        breadcrumb: byId('breadcrumb'),
        alphaSlider: byId<HTMLInputElement>('alpha-slider'),
        alphaValue: byId('alpha-value'),
        guidanceInput: byId<HTMLInputElement>('guidance-input'),
        guidanceMode: byId<HTMLSelectElement>('guidance-mode'),
        guidanceApply: byId<HTMLButtonElement>('guidance-apply'),
        commitButton: byId<HTMLButtonElement>('commit-button'),
        userInput: byId<HTMLInputElement>('user-input'),
        userLoad: byId<HTMLButtonElement>('user-load'),
        list: byId('recommendation-list'),
        gauges: byId('genre-gauges'),
        banner: byId('error-banner'),
    };
}

export function createConsole(doc: Document, client: GatewayClient,
                              previewDelayMs = 300, k = 20): ConsoleApp {
    const el = grab(doc);
    let state = initialState();
    const scheduler = createPreviewScheduler(previewDelayMs);

    function setState(next: ConsoleState): void {
        state = next;
        render();
    }

    function render(): void {
        el.dirtyBadge.textContent = isDirty(state) ? 'draft (uncommitted)' : 'committed';
        el.dirtyBadge.className = isDirty(state) ? 'badge dirty' : 'badge clean';
        el.breadcrumb.textContent = state.breadcrumb > 0
            ? `v${state.activeVersion} · ${state.breadcrumb} version(s)` : '';
        el.alphaValue.textContent = alphaLabel(state.alpha);
        el.commitButton.disabled = !canCommit(state);
        el.banner.textContent = state.banner ?? '';
        el.banner.style.display = state.banner ? 'block' : 'none';

        el.list.textContent = '';
        for (const row of state.rows) {
            const li = doc.createElement('li');
            li.dataset.item = String(row.item);
            const arrow = doc.createElement('span');
            arrow.className = `arrow ${row.arrow}`;
            arrow.textContent = arrowGlyph(row.arrow);
            const title = doc.createElement('span');
            title.className = 'title';
            title.textContent = row.title;
            const chips = doc.createElement('span');
            chips.className = 'chips';
            for (const genre of row.genres) {
                const chip = doc.createElement('span');
                chip.className = 'chip';
                chip.textContent = genre;
                chips.appendChild(chip);
            }
            li.append(arrow, title, chips);
            if (row.delta !== 0) {
                const delta = doc.createElement('span');
                delta.className = 'delta';
                delta.textContent = row.delta > 0 ? `+${row.delta}` : String(row.delta);
                li.appendChild(delta);
            }
            el.list.appendChild(li);
        }

        el.gauges.textContent = '';
        for (const gauge of state.gauges) {
            const div = doc.createElement('div');
            div.className = 'gauge';
            div.dataset.genre = gauge.genre;
            const label = doc.createElement('span');
            label.textContent = gauge.genre;
            const bar = doc.createElement('meter');
            bar.max = 1;
            bar.value = Math.max(0, Math.min(1, gauge.after));
            const nums = doc.createElement('span');
            nums.className = 'gauge-nums';
            nums.textContent = `${gauge.before.toFixed(3)} → ${gauge.after.toFixed(3)}`;
            div.append(label, bar, nums);
            el.gauges.appendChild(div);
        }
    }

    async function guarded(work: () => Promise<void>): Promise<void> {
        try {
            await work();
        } catch (error) {
            if ((error as Error)?.name === 'AbortError') return;
            const message = error instanceof GatewayError
                ? `gateway: ${error.message}` : String(error);
            setState(applyError(state, message));
        }
    }

    function schedulePreview(): void {
        scheduler.schedule((signal) => guarded(async () => {
            if (state.user === null) return;
            const response = await client.preview(state.user, state.draftText,
                                                  state.alpha, k, signal);
            setState(applyPreview(state, response));
        }));
    }

    const app: ConsoleApp = {
        state: () => state,

        async loadUser(user: number): Promise<void> {
            await guarded(async () => {
                const summary = await client.getSummary(user);
                setState(applySummary(state, summary));
                el.editor.value = state.draftText;
                await app.refresh();
            });
        },

        async setAlpha(alpha: number): Promise<void> {
            state = { ...state, alpha };
            render();
            if (state.user === null) return;
            if (isDirty(state)) {
                schedulePreview();
            } else {
                await app.refresh();
            }
        },

        setDraft(text: string): void {
            state = { ...state, draftText: text };
            render();
            schedulePreview();
        },

        async commit(): Promise<void> {
            if (!canCommit(state)) return;
            await guarded(async () => {
                if (state.user === null) return;
                try {
                    const response = await client.commitSummary(
                        state.user, state.draftText, state.activeVersion);
                    setState(applyCommit(state, response));
                    el.editor.value = state.draftText;
                    await app.refresh();
                } catch (error) {
                    if (error instanceof GatewayError && error.status === 409) {
                        // conflict: re-fetch the active summary, keep the draft
                        const draft = state.draftText;
                        const summary = await client.getSummary(state.user!);
                        setState({
                            ...applySummary(state, summary),
                            draftText: draft,
                            banner: 'Summary changed elsewhere; review and commit again.',
                        });
                        return;
                    }
                    throw error;
                }
            });
        },

        async applyGuidance(): Promise<void> {
            await guarded(async () => {
                if (state.user === null || !state.guidance.trim()) return;
                const phrase = `${state.guidanceMode === 'more' ? 'More' : 'Less'} `
                    + state.guidance.trim();
                const response = await client.recommendations(
                    state.user, 0.5, k, phrase, guidanceModeParam(state));
                setState(applyRecommendations(state, response));
            });
        },

        async refresh(): Promise<void> {
            await guarded(async () => {
                if (state.user === null) return;
                const response = await client.recommendations(state.user, state.alpha, k);
                setState(applyRecommendations(state, response));
            });
        },

        renderedOrder: () => renderedOrder(state),
    };

    el.userLoad.addEventListener('click', () => {
        const user = Number(el.userInput.value);
        if (Number.isFinite(user)) void app.loadUser(user);
    });
    el.editor.addEventListener('input', () => app.setDraft(el.editor.value));
    el.alphaSlider.addEventListener('input', () => {
        void app.setAlpha(Number(el.alphaSlider.value));
    });
    el.commitButton.addEventListener('click', () => void app.commit());
    el.guidanceApply.addEventListener('click', () => void app.applyGuidance());
    el.guidanceInput.addEventListener('input', () => {
        state = { ...state, guidance: el.guidanceInput.value };
    });
    el.guidanceMode.addEventListener('change', () => {
        state = { ...state, guidanceMode: el.guidanceMode.value as 'more' | 'less' };
    });

    render();
    return app;
}

// browser entry point; tests construct the console themselves
export function boot(): void {
    const base = (window as unknown as { GATEWAY_URL?: string }).GATEWAY_URL
        ?? 'http://127.0.0.1:8080';
    createConsole(document, new GatewayClient(base));
}
