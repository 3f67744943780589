import type {
	EventsPage, ErrorBody, FailureEntry, LaunchRequest,
	RunMeta, RunRow, Stats, TipDoc, Verdict,
} from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

interface ClientConfig {
	baseUrl: string;
	token?: string;
}

class ApiError extends Error {
	status: number;
	code: string;
	detail: unknown;

	constructor(status: number, body: ErrorBody) {
		super(body.message);
		this.status = status;
		this.code = body.code;
		this.detail = body.detail;
	}
}

class Client {
	private base: string;
	private token: string | undefined;
	private fetchImpl: FetchLike;

	constructor(cfg: ClientConfig, fetchImpl?: FetchLike) {
		this.base = cfg.baseUrl.replace(/\/+$/, "");
		this.token = cfg.token;
		// bind so tests can swap globalThis.fetch before construction only
		this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
	}

	private headers(json: boolean): Record<string, string> {
		const h: Record<string, string> = {};
		if (json) h["Content-Type"] = "application/json";
		if (this.token) h["X-Auth-Token"] = this.token;
		return h;
	}

	private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
		const init: RequestInit = { method, headers: this.headers(body !== undefined) };
		if (body !== undefined) init.body = JSON.stringify(body);
		const resp = await this.fetchImpl(this.base + path, init);
		if (!resp.ok) {
			let parsed: ErrorBody;
			try {
				parsed = (await resp.json()) as ErrorBody;
			} catch {
				parsed = { code: "http_error", message: `HTTP ${resp.status}`, detail: null };
			}
			throw new ApiError(resp.status, parsed);
		}
		if (resp.status === 204) return undefined as T;
		return (await resp.json()) as T;
	}

	get<T>(path: string): Promise<T> {
		return this.request<T>("GET", path);
	}

	health(): Promise<{ status: string; version: string }> {
		return this.get("/health");
	}

	runs(): Promise<RunRow[]> {
		return this.get("/runs");
	}

	run(runId: string): Promise<RunMeta> {
		return this.get(`/runs/${encodeURIComponent(runId)}`);
	}

	events(runId: string, from = 0, limit = 200): Promise<EventsPage> {
		return this.get(`/runs/${encodeURIComponent(runId)}/events?from=${from}&limit=${limit}`);
	}

	/** Walk the cursor until it stops advancing; returns every event. */
	async allEvents(runId: string, pageSize = 200): Promise<{ status: string; total: number; events: EventsPage["events"] }> {
		const events: EventsPage["events"] = [];
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

	screenshotUrl(runId: string, hash: string): string {
		return `${this.base}/runs/${encodeURIComponent(runId)}/screenshots/${hash}`;
	}

	failures(status?: "open" | "resolved"): Promise<FailureEntry[]> {
		return this.get(status ? `/failures?status=${status}` : "/failures");
	}

	failure(id: string): Promise<FailureEntry> {
		return this.get(`/failures/${encodeURIComponent(id)}`);
	}

	resolveFailure(id: string, tipId: string | null, note: string): Promise<FailureEntry> {
		return this.request("POST", `/failures/${encodeURIComponent(id)}/resolve`, { tip_id: tipId, note });
	}

	tips(): Promise<TipDoc[]> {
		return this.get("/tips");
	}

	createTip(doc: TipDoc): Promise<TipDoc> {
		return this.request("POST", "/tips", doc);
	}

	updateTip(doc: TipDoc): Promise<TipDoc> {
		return this.request("PUT", `/tips/${encodeURIComponent(doc.id)}`, doc);
	}

	deleteTip(id: string): Promise<void> {
		return this.request("DELETE", `/tips/${encodeURIComponent(id)}`);
	}

	stats(): Promise<Stats> {
		return this.get("/akb/stats");
	}

	freeze(): Promise<{ frozen: boolean; tips: number }> {
		return this.request("POST", "/akb/freeze", {});
	}

	launch(req: LaunchRequest): Promise<RunMeta | { run_id: string; status: string }> {
		return this.request("POST", "/runs", req);
	}
}

export { ApiError, Client };
export type { ClientConfig, FetchLike, Verdict };
