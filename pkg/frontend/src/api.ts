// Thin typed client for the gateway. The console talks to the model through
// this and nothing else; no ranking or metric is ever computed client-side.

import type {
    CommitResponse,
    HealthResponse,
    PreviewResponse,
    RecommendationsResponse,
    SummaryResponse,
} from './types';

export class GatewayError extends Error {
    constructor(message: string, readonly status: number) {
        super(message);
    }
}

async function parse<T>(response: Response): Promise<T> {
    if (!response.ok) {
        let detail = response.statusText;
        try {
            const body = await response.json();
            if (body.detail) detail = String(body.detail);
        } catch {
            // keep the status text
        }
        throw new GatewayError(detail, response.status);
    }
    return response.json() as Promise<T>;
}

export class GatewayClient {
    constructor(private readonly baseUrl: string,
                private readonly fetchImpl: typeof fetch = fetch) {}

    private url(path: string): string {
        return this.baseUrl.replace(/\/$/, '') + path;
    }

    health(): Promise<HealthResponse> {
        return this.fetchImpl(this.url('/health')).then((r) => parse<HealthResponse>(r));
    }

    genres(): Promise<{ genres: string[] }> {
        return this.fetchImpl(this.url('/catalog/genres'))
            .then((r) => parse<{ genres: string[] }>(r));
    }

    getSummary(user: number): Promise<SummaryResponse> {
        return this.fetchImpl(this.url(`/users/${user}/summary`))
            .then((r) => parse<SummaryResponse>(r));
    }

    commitSummary(user: number, text: string,
                  expectedVersion?: number): Promise<CommitResponse> {
        return this.fetchImpl(this.url(`/users/${user}/summary`), {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ text, expected_version: expectedVersion ?? null }),
        }).then((r) => parse<CommitResponse>(r));
    }

    preview(user: number, text: string, alpha: number, k: number,
            signal?: AbortSignal): Promise<PreviewResponse> {
        return this.fetchImpl(this.url(`/users/${user}/preview`), {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ text, alpha, k }),
            signal,
        }).then((r) => parse<PreviewResponse>(r));
    }

    recommendations(user: number, alpha: number, k: number, guidance?: string,
                    mode?: string): Promise<RecommendationsResponse> {
        const params = new URLSearchParams({ alpha: String(alpha), k: String(k) });
        if (guidance) {
            params.set('guidance', guidance);
            params.set('mode', mode ?? 'positive');
        }
        return this.fetchImpl(this.url(`/users/${user}/recommendations?${params}`))
            .then((r) => parse<RecommendationsResponse>(r));
    }
}
