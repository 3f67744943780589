/**
 * Failure review view model. Pure functions from trajectory events to the
 * structures the renderer walks; everything here is derived on the fly from
 * service responses, nothing is kept between renders.
 */

import type { TraceEvent, Verdict } from "./types.js";

interface StepView {
	step: number;
	url: string | null;
	axExcerpt: string | null;
	axTruncated: boolean;
	screenshot: string | null;
	retrievedTipIds: string[];
	think: string | null;
	action: string | null;
	actError: { kind: string; detail: string } | null;
	envOk: boolean | null;
	envNote: string | null;
	verdict: Verdict | null;
	firing: boolean;
	inLoopGroup: boolean;
}

interface LoopGroup {
	action: string;
	steps: number[];
}

interface ReviewModel {
	runId: string;
	status: string;
	steps: StepView[];
	firingStep: number | null;
	firingVerdict: Verdict | null;
	loopGroup: LoopGroup | null;
	hasScreenshots: boolean;
}

const AX_EXCERPT_LINES = 12;

function axExcerptOf(tree: string): { text: string; truncated: boolean } {
	const lines = tree.split("\n");
	if (lines.length <= AX_EXCERPT_LINES) return { text: tree, truncated: false };
	return { text: lines.slice(0, AX_EXCERPT_LINES).join("\n"), truncated: true };
}

function asString(v: unknown): string | null {
	return typeof v === "string" ? v : null;
}

function buildReview(runId: string, status: string, events: TraceEvent[]): ReviewModel {
	const byStep = new Map<number, StepView>();
	const order: number[] = [];
	const stepOf = (n: number): StepView => {
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

	let firingVerdict: Verdict | null = null;
	let firingStep: number | null = null;

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
						.map((it) => (it && typeof it === "object" ? asString((it as Record<string, unknown>)["tip_id"]) : null))
						.filter((id): id is string => id !== null);
				}
				break;
			}
			case "act": {
				const decision = p["decision"] as Record<string, unknown> | null;
				if (decision) {
					s.action = asString(decision["action"]);
					s.think = asString(decision["think"]);
				}
				const err = p["error"] as Record<string, unknown> | undefined;
				if (err) {
					s.actError = { kind: String(err["kind"] ?? ""), detail: String(err["detail"] ?? "") };
				}
				break;
			}
			case "env_step": {
				s.envOk = typeof p["ok"] === "boolean" ? (p["ok"] as boolean) : null;
				s.envNote = asString(p["note"]);
				break;
			}
			case "trigger": {
				const v: Verdict = {
					fired: Boolean(p["fired"]),
					source: String(p["source"] ?? ""),
					detail: String(p["detail"] ?? ""),
					evidence: Array.isArray(p["evidence"]) ? (p["evidence"] as number[]) : [],
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

	let loopGroup: LoopGroup | null = null;
	if (firingVerdict !== null) {
		const fv: Verdict = firingVerdict;
		if (fv.source === "rule_loop") {
			const steps = fv.evidence.slice();
			let action: string | null = null;
			for (const n of steps) {
				const s = byStep.get(n);
				if (s) {
					s.inLoopGroup = true;
					if (s.action !== null) action = s.action;
				}
			}
			loopGroup = { action: action ?? "", steps };
		}
	}

	const steps = order.sort((a, b) => a - b).map((n) => byStep.get(n)!);
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
export type { LoopGroup, ReviewModel, StepView };
