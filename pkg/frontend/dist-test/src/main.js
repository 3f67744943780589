/**
 * Workbench entry point. Hash-routed, no state of its own: every view is
 * rebuilt from service responses, so a reload always reproduces the page.
 * Config is just the service base URL and an optional auth token.
 */
import { ApiError, Client } from "./api.js";
import { emptyDraft } from "./editor.js";
import { EventsPoller } from "./poll.js";
import { buildReview } from "./review.js";
import { el, renderFailureList, renderReview, renderTipEditor } from "./render.js";
const CONFIG_KEY = "sitewise-workbench-config";
function loadConfig() {
    try {
        const raw = localStorage.getItem(CONFIG_KEY);
        if (raw)
            return JSON.parse(raw);
    }
    catch {
        // storage may be unavailable; fall through to defaults
    }
    return { baseUrl: "http://127.0.0.1:8101", token: "" };
}
function saveConfig(cfg) {
    try {
        localStorage.setItem(CONFIG_KEY, JSON.stringify(cfg));
    }
    catch {
        // best effort only
    }
}
class App {
    cfg;
    client;
    main;
    statsBox;
    errorBox;
    poller = null;
    constructor(mount) {
        this.cfg = loadConfig();
        this.client = this.makeClient();
        this.statsBox = el("span", { class: "stats" });
        this.errorBox = el("div", { class: "error-banner", hidden: "hidden" });
        this.main = el("main", { class: "view" });
        mount.append(this.buildHeader(), this.errorBox, this.main);
        window.addEventListener("hashchange", () => void this.route());
    }
    makeClient() {
        return new Client({ baseUrl: this.cfg.baseUrl, token: this.cfg.token || undefined });
    }
    buildHeader() {
        const urlInput = el("input", { type: "text", value: this.cfg.baseUrl, size: "28" });
        const tokenInput = el("input", { type: "password", value: this.cfg.token, placeholder: "token", size: "12" });
        const apply = el("button", {}, ["connect"]);
        apply.addEventListener("click", () => {
            this.cfg = { baseUrl: urlInput.value.trim(), token: tokenInput.value };
            saveConfig(this.cfg);
            this.client = this.makeClient();
            void this.route();
        });
        return el("header", { class: "topbar" }, [
            el("h1", {}, ["sitewise workbench"]),
            el("nav", {}, [
                el("a", { href: "#/failures" }, ["failures"]),
                el("a", { href: "#/tips" }, ["tips"]),
                el("a", { href: "#/runs" }, ["runs"]),
            ]),
            el("span", { class: "config" }, [urlInput, tokenInput, apply]),
            this.statsBox,
        ]);
    }
    showError(err) {
        const msg = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        this.errorBox.textContent = msg;
        this.errorBox.removeAttribute("hidden");
    }
    clearError() {
        this.errorBox.setAttribute("hidden", "hidden");
        this.errorBox.textContent = "";
    }
    stopPolling() {
        if (this.poller) {
            this.poller.stop();
            this.poller = null;
        }
    }
    async refreshStats() {
        try {
            const stats = await this.client.stats();
            this.statsBox.textContent = `${stats.tips} tips${stats.frozen ? " (frozen)" : ""}`;
            this.statsBox.classList.toggle("frozen", stats.frozen);
            return stats;
        }
        catch {
            this.statsBox.textContent = "offline";
            return null;
        }
    }
    async route() {
        this.stopPolling();
        this.clearError();
        const hash = location.hash || "#/failures";
        const [path, query] = hash.slice(1).split("?");
        const parts = path.split("/").filter((p) => p.length > 0);
        const params = new URLSearchParams(query ?? "");
        try {
            if (parts[0] === "failures" && parts.length === 2)
                await this.showFailure(parts[1]);
            else if (parts[0] === "tips")
                await this.showTips(params);
            else if (parts[0] === "runs" && parts.length === 2)
                await this.showRun(parts[1]);
            else if (parts[0] === "runs")
                await this.showRuns();
            else
                await this.showFailures();
        }
        catch (err) {
            this.showError(err);
        }
    }
    async showFailures() {
        await this.refreshStats();
        const entries = await this.client.failures();
        this.main.replaceChildren(el("h2", {}, ["failures"]), renderFailureList(entries, (id) => {
            location.hash = `#/failures/${id}`;
        }));
    }
    async showRuns() {
        await this.refreshStats();
        const rows = await this.client.runs();
        const ul = el("ul", { class: "run-list" });
        for (const row of rows) {
            ul.append(el("li", {}, [
                el("a", { href: `#/runs/${row.run_id}` }, [row.run_id]),
                el("span", { class: `status status-${row.status}` }, [row.status]),
                el("span", {}, [`${row.steps} steps`]),
            ]));
        }
        this.main.replaceChildren(el("h2", {}, ["runs"]), ul);
    }
    reviewBox(runId, status, events) {
        const model = buildReview(runId, status, events);
        const box = renderReview(model, (hash) => this.client.screenshotUrl(runId, hash));
        this.hydrateShots(box);
        return box;
    }
    /**
     * An img tag cannot carry the auth header, so with a token configured the
     * screenshots are fetched by hand and swapped in as blob urls. Failed
     * fetches drop the image outright rather than leaving a broken frame.
     */
    hydrateShots(root) {
        if (!this.cfg.token)
            return;
        for (const img of Array.from(root.querySelectorAll("img.shot"))) {
            const src = img.getAttribute("src");
            if (!src)
                continue;
            img.removeAttribute("src");
            void fetch(src, { headers: { "X-Auth-Token": this.cfg.token } })
                .then((resp) => (resp.ok ? resp.blob() : Promise.reject(new Error(`HTTP ${resp.status}`))))
                .then((blob) => img.setAttribute("src", URL.createObjectURL(blob)))
                .catch(() => img.remove());
        }
    }
    async showRun(runId) {
        await this.refreshStats();
        const got = await this.client.allEvents(runId);
        const box = el("div", {});
        box.append(this.reviewBox(runId, got.status, got.events));
        this.main.replaceChildren(box);
        if (got.status === "running") {
            this.poller = new EventsPoller(this.client, runId, (u) => {
                box.replaceChildren(this.reviewBox(runId, u.status, u.events));
            });
            this.poller.start();
        }
    }
    async showFailure(failureId) {
        await this.refreshStats();
        const entry = await this.client.failure(failureId);
        const got = await this.client.allEvents(entry.run_id);
        const authorLink = el("a", {
            class: "author-tip",
            href: `#/tips?failure=${encodeURIComponent(entry.id)}&goal=${encodeURIComponent(entry.goal_id)}`,
        }, ["author a tip for this failure"]);
        this.main.replaceChildren(el("div", { class: "failure-head" }, [
            el("span", { class: `failure-status failure-${entry.status}` }, [entry.status]),
            authorLink,
        ]), this.reviewBox(entry.run_id, got.status, got.events));
    }
    async showTips(params) {
        const stats = await this.refreshStats();
        const frozen = stats?.frozen ?? false;
        const tips = await this.client.tips();
        const list = el("ul", { class: "tip-list" });
        for (const tip of tips) {
            list.append(el("li", {}, [el("code", {}, [tip.id]), el("span", {}, [tip.scope])]));
        }
        const draft = emptyDraft();
        const failureId = params.get("failure");
        const goalId = params.get("goal");
        if (failureId)
            draft.sourceFailureId = failureId;
        const actions = el("div", { class: "after-save" });
        const editor = renderTipEditor({
            frozen,
            draft,
            onSubmit: (doc) => void this.submitTip(doc, failureId, goalId, actions),
        });
        this.main.replaceChildren(el("h2", {}, ["tips"]), list, editor, actions);
    }
    async submitTip(doc, failureId, goalId, actions) {
        try {
            await this.client.createTip(doc);
        }
        catch (err) {
            this.showError(err); // a 409 here means the store froze underneath us
            return;
        }
        this.clearError();
        const saved = el("span", { class: "saved" }, [`saved ${doc.id}`]);
        actions.replaceChildren(saved);
        if (failureId) {
            const resolve = el("button", {}, ["mark failure resolved"]);
            resolve.addEventListener("click", () => {
                void this.client
                    .resolveFailure(failureId, doc.id, "resolved from workbench")
                    .then(() => resolve.replaceWith(el("span", {}, ["resolved"])))
                    .catch((err) => this.showError(err));
            });
            actions.append(resolve);
        }
        if (goalId) {
            const rerun = el("button", {}, [`re-run ${goalId}`]);
            rerun.addEventListener("click", () => {
                void this.client
                    .launch({ task_id: goalId, wait: false })
                    .then((resp) => {
                    location.hash = `#/runs/${resp.run_id}`;
                })
                    .catch((err) => this.showError(err));
            });
            actions.append(rerun);
        }
    }
}
function mountApp(mount) {
    const app = new App(mount);
    void app.route();
    return app;
}
if (typeof document !== "undefined" && document.getElementById("app")) {
    mountApp(document.getElementById("app"));
}
export { App, loadConfig, mountApp, saveConfig };
