class ApiError extends Error {
    status;
    code;
    detail;
    constructor(status, body) {
        super(body.message);
        this.status = status;
        this.code = body.code;
        this.detail = body.detail;
    }
}
class Client {
    base;
    token;
    fetchImpl;
    constructor(cfg, fetchImpl) {
        this.base = cfg.baseUrl.replace(/\/+$/, "");
        this.token = cfg.token;
        // bind so tests can swap globalThis.fetch before construction only
        this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
    }
    headers(json) {
        const h = {};
        if (json)
            h["Content-Type"] = "application/json";
        if (this.token)
            h["X-Auth-Token"] = this.token;
        return h;
    }
    async request(method, path, body) {
        const init = { method, headers: this.headers(body !== undefined) };
        if (body !== undefined)
            init.body = JSON.stringify(body);
        const resp = await this.fetchImpl(this.base + path, init);
        if (!resp.ok) {
            let parsed;
            try {
                parsed = (await resp.json());
            }
            catch {
                parsed = { code: "http_error", message: `HTTP ${resp.status}`, detail: null };
            }
            throw new ApiError(resp.status, parsed);
        }
        if (resp.status === 204)
            return undefined;
        return (await resp.json());
    }
    get(path) {
        return this.request("GET", path);
    }
    health() {
        return this.get("/health");
    }
    runs() {
        return this.get("/runs");
    }
    run(runId) {
        return this.get(`/runs/${encodeURIComponent(runId)}`);
    }
    events(runId, from = 0, limit = 200) {
        return this.get(`/runs/${encodeURIComponent(runId)}/events?from=${from}&limit=${limit}`);
    }
    /** Walk the cursor until it stops advancing; returns every event. */
    async allEvents(runId, pageSize = 200) {
        const events = [];
        let cursor = 0;
        for (;;) {
            const page = await this.events(runId, cursor, pageSize);
            events.push(...page.events);
            if (page.next === cursor) {
                return { status: page.status, total: page.total, events };
            }
            cursor = page.next;
        }
    }
    screenshotUrl(runId, hash) {
        return `${this.base}/runs/${encodeURIComponent(runId)}/screenshots/${hash}`;
    }
    failures(status) {
        return this.get(status ? `/failures?status=${status}` : "/failures");
    }
    failure(id) {
        return this.get(`/failures/${encodeURIComponent(id)}`);
    }
    resolveFailure(id, tipId, note) {
        return this.request("POST", `/failures/${encodeURIComponent(id)}/resolve`, { tip_id: tipId, note });
    }
    tips() {
        return this.get("/tips");
    }
    createTip(doc) {
        return this.request("POST", "/tips", doc);
    }
    updateTip(doc) {
        return this.request("PUT", `/tips/${encodeURIComponent(doc.id)}`, doc);
    }
    deleteTip(id) {
        return this.request("DELETE", `/tips/${encodeURIComponent(id)}`);
    }
    stats() {
        return this.get("/akb/stats");
    }
    freeze() {
        return this.request("POST", "/akb/freeze", {});
    }
    launch(req) {
        return this.request("POST", "/runs", req);
    }
}
export { ApiError, Client };
