import type { Client } from "./api.js";
import type { TraceEvent } from "./types.js";

const POLL_INTERVAL_MS = 2000;

interface PollUpdate {
	status: string;
	total: number;
	events: TraceEvent[]; // everything seen so far, in order
	fresh: TraceEvent[]; // this tick only
}

/**
 * Cursor poller for a live run. Each tick asks the service for events past
 * the cursor; the cursor only moves forward, so nothing is fetched twice.
 * Stops itself once the run leaves the running state.
 */
class EventsPoller {
	private client: Client;
	private runId: string;
	private onUpdate: (u: PollUpdate) => void;
	private cursor = 0;
	private seen: TraceEvent[] = [];
	private timer: ReturnType<typeof setInterval> | null = null;
	private inflight = false;

	constructor(client: Client, runId: string, onUpdate: (u: PollUpdate) => void) {
		this.client = client;
		this.runId = runId;
		this.onUpdate = onUpdate;
	}

	start(intervalMs = POLL_INTERVAL_MS): void {
		if (this.timer !== null) return;
		this.timer = setInterval(() => {
			void this.tick();
		}, intervalMs);
		void this.tick();
	}

	stop(): void {
		if (this.timer !== null) {
			clearInterval(this.timer);
			this.timer = null;
		}
	}

	get running(): boolean {
		return this.timer !== null;
	}

	/** One poll round; safe to call directly (tests do). */
	async tick(): Promise<void> {
		if (this.inflight) return;
		this.inflight = true;
		try {
			let page = await this.client.events(this.runId, this.cursor);
			const fresh: TraceEvent[] = [];
			for (;;) {
				fresh.push(...page.events);
				if (page.next === this.cursor) break;
				this.cursor = page.next;
				page = await this.client.events(this.runId, this.cursor);
			}
			this.seen.push(...fresh);
			if (page.status !== "running") this.stop();
			this.onUpdate({ status: page.status, total: page.total, events: this.seen, fresh });
		} finally {
			this.inflight = false;
		}
	}
}

export { EventsPoller, POLL_INTERVAL_MS };
export type { PollUpdate };
