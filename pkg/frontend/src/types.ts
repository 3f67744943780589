/**
 * Wire types for the sitewise service. These mirror the JSON the service
 * emits; the UI never stores any of this beyond the current render.
 */

export interface Verdict {
	fired: boolean;
	source: string;
	detail: string;
	evidence: number[];
}

export interface TraceEvent {
	v: number;
	step: number;
	phase: string;
	ts: string;
	payload: Record<string, unknown>;
}

export interface EventsPage {
	run_id: string;
	status: string;
	next: number;
	total: number;
	events: TraceEvent[];
}

export interface RunRow {
	run_id: string;
	goal_id: string;
	status: string;
	mode: string;
	steps: number;
	answer: string | null;
}

export interface RunMeta {
	v: number;
	run_id: string;
	goal: { id: string; instruction: string; site_hint: string } | null;
	mode: string;
	status: string;
	steps: number;
	answer: string | null;
	outcome: { success: boolean; mode: string; detail: string } | null;
	verdict: Verdict | null;
	error: { kind: string; detail: string } | null;
	belief_chars: number[];
}

export interface FailureEntry {
	id: string;
	run_id: string;
	goal_id: string;
	status: "open" | "resolved";
	verdict: Verdict | null;
	run_dir: string;
	answer: string | null;
	resolution: { tip_id: string | null; note: string } | null;
}

export interface GuardDoc {
	kind: string;
	action_pattern: string;
	url_pattern: string;
}

export interface TipDoc {
	id: string;
	domain_label: string;
	scope: string;
	action_guidance: string;
	constraint: string;
	goal_alignment: string;
	url_patterns: string[];
	keywords: string[];
	guard?: GuardDoc | null;
	source_failure_id?: string | null;
	created_at?: string;
}

export interface Stats {
	frozen: boolean;
	tips: number;
	domains: Record<string, number>;
}

export interface LaunchRequest {
	task_id: string;
	mode?: string;
	max_steps?: number;
	wait?: boolean;
}

export interface ErrorBody {
	code: string;
	message: string;
	detail: unknown;
}
