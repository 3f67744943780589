/**
 * Failure review view model. Pure functions from trajectory events to the
 * structures the renderer walks; everything here is derived on the fly from
 * service responses, nothing is kept between renders.
 */
const AX_EXCERPT_LINES = 12;
function axExcerptOf(tree) {
    const lines = tree.split("\n");
    if (lines.length <= AX_EXCERPT_LINES)
        return { text: tree, truncated: false };
    return { text: lines.slice(0, AX_EXCERPT_LINES).join("\n"), truncated: true };
}
function asString(v) {
    return typeof v === "string" ? v : null;
}
function buildReview(runId, status, events) {
    const byStep = new Map();
    const order = [];
    const stepOf = (n) => {
        let s = byStep.get(n);
        if (!s) {
            s = {
                step: n, url: null, axExcerpt: null, axTruncated: false, screenshot: null,
                retrievedTipIds: [], think: null, action: null, actError: null,
                envOk: null, envNote: null, verdict: null, firing: false, inLoopGroup: false,
            };
            byStep.set(n, s);
            order.push(n);
        }
        return s;
    };
    let firingVerdict = null;
    let firingStep = null;
    for (const ev of events) {
        const s = stepOf(ev.step);
        const p = ev.payload;
        switch (ev.phase) {
            case "observe": {
                s.url = asString(p["url"]);
                const tree = asString(p["ax_tree"]);
                if (tree !== null) {
                    const ex = axExcerptOf(tree);
                    s.axExcerpt = ex.text;
                    s.axTruncated = ex.truncated;
                }
                s.screenshot = asString(p["screenshot_ref"]);
                break;
            }
            case "retrieve": {
                const items = p["items"];
                if (Array.isArray(items)) {
                    s.retrievedTipIds = items
                        .map((it) => (it && typeof it === "object" ? asString(it["tip_id"]) : null))
                        .filter((id) => id !== null);
                }
                break;
            }
            case "act": {
                const decision = p["decision"];
                if (decision) {
                    s.action = asString(decision["action"]);
                    s.think = asString(decision["think"]);
                }
                const err = p["error"];
                if (err) {
                    s.actError = { kind: String(err["kind"] ?? ""), detail: String(err["detail"] ?? "") };
                }
                break;
            }
            case "env_step": {
                s.envOk = typeof p["ok"] === "boolean" ? p["ok"] : null;
                s.envNote = asString(p["note"]);
                break;
            }
            case "trigger": {
                const v = {
                    fired: Boolean(p["fired"]),
                    source: String(p["source"] ?? ""),
                    detail: String(p["detail"] ?? ""),
                    evidence: Array.isArray(p["evidence"]) ? p["evidence"] : [],
                };
                s.verdict = v;
                if (v.fired) {
                    // a run records at most one fired verdict; keep the last seen
                    firingVerdict = v;
                    firingStep = ev.step;
                    s.firing = true;
                }
                break;
            }
            default:
                break;
        }
    }
    let loopGroup = null;
    if (firingVerdict !== null) {
        const fv = firingVerdict;
        if (fv.source === "rule_loop") {
            const steps = fv.evidence.slice();
            let action = null;
            for (const n of steps) {
                const s = byStep.get(n);
                if (s) {
                    s.inLoopGroup = true;
                    if (s.action !== null)
                        action = s.action;
                }
            }
            loopGroup = { action: action ?? "", steps };
        }
    }
    const steps = order.sort((a, b) => a - b).map((n) => byStep.get(n));
    return {
        runId,
        status,
        steps,
        firingStep,
        firingVerdict,
        loopGroup,
        hasScreenshots: steps.some((s) => s.screenshot !== null),
    };
}
export { AX_EXCERPT_LINES, buildReview };
