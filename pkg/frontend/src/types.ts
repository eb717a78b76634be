// Wire shapes of the gateway API, mirrored one to one.

export interface RankedItem {
    rank: number;
    item: number;
    title: string;
    genres: string[];
    score: number;
}

export interface ItemDiff {
    item: number;
    title: string;
    rank_before: number;
    rank_after: number;
    delta: number;
}

export interface GenreDiff {
    genre: string;
    before: number;
    after: number;
    delta: number;
}

export interface SummaryResponse {
    user: number;
    text: string;
    version: number;
    source: string;
    parent: string | null;
    history_length: number;
}

export interface CommitResponse {
    user: number;
    text: string;
    version: number;
    parent: string | null;
}

export interface PreviewResponse {
    user: number;
    alpha: number;
    k: number;
    diff: { items: ItemDiff[]; genres: GenreDiff[] };
    ranking: RankedItem[];
}

export interface RecommendationsResponse {
    user: number;
    alpha: number;
    k: number;
    guidance: string | null;
    mode: string | null;
    items: RankedItem[];
}

export interface HealthResponse {
    status: string;
    checkpoint: string;
    items: number;
    users: number;
}
