const POLL_INTERVAL_MS = 2000;
/**
 * Cursor poller for a live run. Each tick asks the service for events past
 * the cursor; the cursor only moves forward, so nothing is fetched twice.
 * Stops itself once the run leaves the running state.
 */
class EventsPoller {
    client;
    runId;
    onUpdate;
    cursor = 0;
    seen = [];
    timer = null;
    inflight = false;
    constructor(client, runId, onUpdate) {
        this.client = client;
        this.runId = runId;
        this.onUpdate = onUpdate;
    }
    start(intervalMs = POLL_INTERVAL_MS) {
        if (this.timer !== null)
            return;
        this.timer = setInterval(() => {
            void this.tick();
        }, intervalMs);
        void this.tick();
    }
    stop() {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }
    get running() {
        return this.timer !== null;
    }
    /** One poll round; safe to call directly (tests do). */
    async tick() {
        if (this.inflight)
            return;
        this.inflight = true;
        try {
            let page = await this.client.events(this.runId, this.cursor);
            const fresh = [];
            for (;;) {
                fresh.push(...page.events);
                if (page.next === this.cursor)
                    break;
                this.cursor = page.next;
                page = await this.client.events(this.runId, this.cursor);
            }
            this.seen.push(...fresh);
            if (page.status !== "running")
                this.stop();
            this.onUpdate({ status: page.status, total: page.total, events: this.seen, fresh });
        }
        finally {
            this.inflight = false;
        }
    }
}
export { EventsPoller, POLL_INTERVAL_MS };
