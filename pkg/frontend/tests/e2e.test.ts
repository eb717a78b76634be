// @vitest-environment happy-dom
//
// End-to-end against a live gateway serving a trained toy checkpoint.
// scripts/e2e.sh builds the system, starts the server, and sets
// GATEWAY_URL / GATEWAY_USER before running this file.

import fs from 'node:fs';
import path from 'node:path';
import { beforeAll, describe, expect, it } from 'vitest';

import { GatewayClient } from '../src/api';
import { createConsole, type ConsoleApp } from '../src/app';

const GATEWAY_URL = process.env.GATEWAY_URL ?? '';
const GATEWAY_USER = Number(process.env.GATEWAY_USER ?? 'NaN');
const configured = GATEWAY_URL !== '' && Number.isFinite(GATEWAY_USER);

const html = fs.readFileSync(path.join(__dirname, '..', 'index.html'), 'utf-8')
    .replace(/<script type="module">[\s\S]*?<\/script>/, '')
    .replace(/<link[^>]*>/, '');

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

describe.skipIf(!configured)('console against live gateway', () => {
    let client: GatewayClient;
    let app: ConsoleApp;

    beforeAll(async () => {
        client = new GatewayClient(GATEWAY_URL, fetch);
        const health = await client.health();
        expect(health.status).toBe('ok');
        document.documentElement.innerHTML = html;
        app = createConsole(document, client, 1);
        await app.loadUser(GATEWAY_USER);
    });

    it('renders the gateway order exactly for alpha in {0, 0.5, 1}', async () => {
        for (const alpha of [0, 0.5, 1]) {
            await app.setAlpha(alpha);
            const direct = await client.recommendations(GATEWAY_USER, alpha, 20);
            expect(app.renderedOrder()).toEqual(direct.items.map((i) => i.item));
            const rendered = Array.from(
                document.querySelectorAll('#recommendation-list li'),
            ).map((li) => Number((li as HTMLElement).dataset.item));
            expect(rendered).toEqual(direct.items.map((i) => i.item));
        }
    });

    it('slider sweep transitions through gateway rankings at each step', async () => {
        for (const alpha of [0, 0.25, 0.5, 0.75, 1]) {
            await app.setAlpha(alpha);
            const direct = await client.recommendations(GATEWAY_USER, alpha, 20);
            expect(app.renderedOrder()).toEqual(direct.items.map((i) => i.item));
        }
    });

    it('no-op draft preview reports all-zero deltas', async () => {
        const active = (await client.getSummary(GATEWAY_USER)).text;
        const preview = await client.preview(GATEWAY_USER, active, 0.5, 20);
        expect(preview.diff.items.every((i) => i.delta === 0)).toBe(true);
        expect(preview.diff.genres.every((g) => g.delta === 0)).toBe(true);

        app.setDraft(active);
        await sleep(400); // debounce (1 ms) plus request round-trip
        const arrows = Array.from(document.querySelectorAll('#recommendation-list .arrow'))
            .map((el) => el.textContent);
        expect(arrows.every((a) => a === '–')).toBe(true);
    });

    it('alpha zero preview shows zero deltas for any draft', async () => {
        const preview = await client.preview(
            GATEWAY_USER, 'Summary: completely different tastes now.', 0, 20);
        expect(preview.diff.items.every((i) => i.delta === 0)).toBe(true);
    });

    it('commit round-trips the draft byte-exactly and grows the breadcrumb', async () => {
        const before = await client.getSummary(GATEWAY_USER);
        const draft = before.text + ' Lately, courtroom stories have grown on the user.';
        app.setDraft(draft);
        await app.commit();
        const after = await client.getSummary(GATEWAY_USER);
        expect(after.text).toBe(draft);
        expect(after.version).toBe(before.version + 1);
        expect(app.state().breadcrumb).toBe(before.history_length + 1);
        expect(app.state().activeText).toBe(draft);
    });
});
