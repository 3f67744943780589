/** Shared test plumbing: a recording fetch stub, a DOM, trajectory builders. */
import { Window } from "happy-dom";
function makeFetchStub(handler) {
    const requests = [];
    const impl = (input, init) => {
        const headers = {};
        for (const [k, v] of Object.entries(init?.headers ?? {})) {
            headers[k.toLowerCase()] = v;
        }
        const req = {
            method: init?.method ?? "GET",
            url: input,
            headers,
            body: typeof init?.body === "string" ? JSON.parse(init.body) : null,
        };
        requests.push(req);
        const out = handler(req) ?? { status: 404, body: { code: "not_found", message: "no route", detail: null } };
        const status = out.status ?? 200;
        if (status === 204)
            return Promise.resolve(new Response(null, { status }));
        return Promise.resolve(new Response(JSON.stringify(out.body ?? {}), {
            status,
            headers: { "Content-Type": "application/json" },
        }));
    };
    return { fetch: impl, requests };
}
let domReady = false;
/** Installs happy-dom globals once; render tests call this before building nodes. */
function ensureDom() {
    if (domReady)
        return;
    const win = new Window({ url: "http://workbench.test/" });
    const g = globalThis;
    g.window = win;
    g.document = win.document;
    g.localStorage = win.localStorage;
    g.location = win.location;
    g.Event = win.Event;
    g.Node = win.Node;
    domReady = true;
}
function stepEvents(step, spec) {
    const ts = "2026-03-01T00:00:00.000Z";
    const mk = (phase, payload) => ({ v: 1, step, phase, ts, payload });
    const out = [
        mk("observe", {
            step,
            url: spec.url ?? `http://site.mock/page/${step}`,
            ax_tree: spec.axTree ?? `RootWebArea 'Page ${step}'\n  [1] link 'Next'`,
            marks: [],
            screenshot_ref: spec.screenshot ?? null,
            page_fingerprint: `fp-${step}`,
        }),
        mk("retrieve", { items: (spec.tipIds ?? []).map((id) => ({ tip_id: id, domain: "", stage: "url", score: 1.0 })), query: {} }),
        mk("summarize", { sections: {}, active_subgoal: null, char_len: 100, deviation: null }),
    ];
    if (spec.actError) {
        out.push(mk("act", { decision: null, error: spec.actError }));
    }
    else {
        out.push(mk("act", {
            decision: {
                action: spec.action === undefined ? `click("1")` : spec.action,
                think: spec.think ?? "onward",
                retry_count: 0,
            },
        }));
    }
    out.push(mk("env_step", { ok: spec.envOk ?? true, note: spec.envNote ?? null }));
    if (spec.verdict)
        out.push(mk("trigger", { ...spec.verdict }));
    else
        out.push(mk("trigger", { fired: false, source: "", detail: "", evidence: [] }));
    return out;
}
/** Step 0 diverges, steps 1..3 repeat the same click; the loop rule fires at 3. */
function loopTrajectory(opts = {}) {
    const shot = (n) => (opts.screenshots ? `${"ab".repeat(30)}${n}000` : null);
    const events = [];
    events.push(...stepEvents(0, { action: `click("7")`, think: "open the thread", screenshot: shot(0) }));
    for (const n of [1, 2, 3]) {
        events.push(...stepEvents(n, {
            url: "http://forum.mock/f/pittsburgh/129/local-issues-thread",
            action: `click("10")`,
            think: "maybe the title row reveals a vote control",
            envNote: "ineffective action",
            screenshot: shot(n),
            verdict: n === 3
                ? { fired: true, source: "rule_loop", detail: `action click("10") repeated 3 times on an unchanged page`, evidence: [1, 2, 3] }
                : undefined,
        }));
    }
    return events;
}
/** A long clean walk; used for paging. */
function longTrajectory(steps) {
    const events = [];
    for (let n = 0; n < steps; n++)
        events.push(...stepEvents(n, { action: `click("${n}")` }));
    return events;
}
function pageHandler(runId, status, events) {
    return (req) => {
        const u = new URL(req.url);
        if (u.pathname === `/runs/${runId}/events`) {
            const from = Number(u.searchParams.get("from") ?? "0");
            const limit = Number(u.searchParams.get("limit") ?? "200");
            const slice = events.slice(from, from + limit);
            return {
                body: { run_id: runId, status, next: from + slice.length, total: events.length, events: slice },
            };
        }
        return undefined;
    };
}
export { ensureDom, loopTrajectory, longTrajectory, makeFetchStub, pageHandler, stepEvents };
