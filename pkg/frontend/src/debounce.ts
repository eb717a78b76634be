// Debounced, latest-wins scheduling for preview requests: typing resets the
// timer, and firing a new request aborts the one in flight.

export interface PreviewScheduler {
    schedule(run: (signal: AbortSignal) => Promise<void>): void;
    cancel(): void;
}

export function createPreviewScheduler(delayMs = 300): PreviewScheduler {
    let timer: ReturnType<typeof setTimeout> | null = null;
    let controller: AbortController | null = null;

    return {
        schedule(run) {
            if (timer !== null) clearTimeout(timer);
            timer = setTimeout(() => {
                timer = null;
                controller?.abort();
                controller = new AbortController();
                const signal = controller.signal;
                void run(signal).catch((error: unknown) => {
                    if ((error as Error)?.name !== 'AbortError') throw error;
                });
            }, delayMs);
        },
        cancel() {
            if (timer !== null) clearTimeout(timer);
            timer = null;
            controller?.abort();
            controller = null;
        },
    };
}
