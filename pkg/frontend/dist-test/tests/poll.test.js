import assert from "node:assert/strict";
import { test } from "node:test";
import { Client } from "../src/api.js";
import { EventsPoller, POLL_INTERVAL_MS } from "../src/poll.js";
import { makeFetchStub, stepEvents } from "./helpers.js";
// a run the test extends between ticks, like a live service would
function liveRun() {
    const state = { status: "running", events: [] };
    const stub = makeFetchStub((req) => {
        const u = new URL(req.url);
        if (!u.pathname.endsWith("/events"))
            return undefined;
        const from = Number(u.searchParams.get("from") ?? "0");
        const slice = state.events.slice(from);
        return {
            body: { run_id: "live", status: state.status, next: from + slice.length, total: state.events.length, events: slice },
        };
    });
    const client = new Client({ baseUrl: "http://svc.test" }, stub.fetch);
    return { state, stub, client };
}
test("poll interval is two seconds", () => {
    assert.equal(POLL_INTERVAL_MS, 2000);
});
test("cursor only moves forward; each event arrives once", async () => {
    const { state, client } = liveRun();
    const updates = [];
    const p = new EventsPoller(client, "live", (u) => updates.push(u));
    state.events.push(...stepEvents(0, {}));
    await p.tick();
    assert.equal(updates.length, 1);
    assert.equal(updates[0].events.length, 6);
    assert.equal(updates[0].fresh.length, 6);
    state.events.push(...stepEvents(1, {}));
    await p.tick();
    assert.equal(updates[1].events.length, 12);
    assert.equal(updates[1].fresh.length, 6);
    assert.deepEqual(updates[1].fresh.map((e) => e.step), [1, 1, 1, 1, 1, 1]);
    // nothing new: cumulative view unchanged
    await p.tick();
    assert.equal(updates[2].events.length, 12);
    assert.equal(updates[2].fresh.length, 0);
});
test("poller stops itself when the run leaves running", async () => {
    const { state, client } = liveRun();
    const updates = [];
    const p = new EventsPoller(client, "live", (u) => updates.push(u));
    state.events.push(...stepEvents(0, {}));
    p.start(1_000_000); // long interval; the immediate tick does the work
    for (let i = 0; i < 100 && updates.length === 0; i++) {
        await new Promise((r) => setTimeout(r, 5));
    }
    assert.ok(p.running);
    state.status = "success";
    await p.tick();
    assert.equal(p.running, false);
    assert.equal(updates[updates.length - 1].status, "success");
    p.stop(); // idempotent
});
test("overlapping ticks are refused while one is in flight", async () => {
    let release = null;
    const gate = new Promise((r) => (release = r));
    let calls = 0;
    const impl = async (input) => {
        calls += 1;
        await gate;
        const u = new URL(input);
        const from = Number(u.searchParams.get("from") ?? "0");
        return new Response(JSON.stringify({ run_id: "live", status: "running", next: from, total: 0, events: [] }), { status: 200, headers: { "Content-Type": "application/json" } });
    };
    const client = new Client({ baseUrl: "http://svc.test" }, impl);
    const p = new EventsPoller(client, "live", () => undefined);
    const first = p.tick();
    const second = p.tick(); // no-op: first still waiting on the gate
    release();
    await Promise.all([first, second]);
    assert.equal(calls, 1);
});
