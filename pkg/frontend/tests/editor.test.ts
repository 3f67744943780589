import assert from "node:assert/strict";
import { test } from "node:test";

import {
	ACTION_NAMES, GUARD_KINDS, composeActionPattern, draftToDoc,
	emptyDraft, splitList, validateDraft,
} from "../src/editor.js";
import type { TipDraft } from "../src/editor.js";

function validDraft(): TipDraft {
	const d = emptyDraft();
	d.id = "forum-vote-toggle";
	d.domainLabel = "forum";
	d.scope = "Voting on comments in forum threads.";
	d.actionGuidance = "Open the '...' toggle on the comment, then press Upvote.";
	d.constraint = "Press Upvote exactly once.";
	d.goalAlignment = "No vote control is visible until the toggle opens.";
	d.urlPatterns = ["http://forum.mock/*"];
	d.keywords = ["vote", "upvote"];
	return d;
}

test("an empty draft breaks the required rules", () => {
	const problems = validateDraft(emptyDraft());
	assert.ok(problems.some((p) => p.includes("id")));
	assert.ok(problems.some((p) => p.includes("scope")));
	assert.ok(problems.some((p) => p.includes("action_guidance")));
	assert.ok(problems.some((p) => p.includes("url_patterns or keywords")));
});

test("a filled draft validates clean", () => {
	assert.deepEqual(validateDraft(validDraft()), []);
});

test("scope alone missing still blocks", () => {
	const d = validDraft();
	d.scope = "   ";
	const problems = validateDraft(d);
	assert.equal(problems.length, 1);
	assert.ok(problems[0].includes("scope"));
});

test("keywords must be lowercase", () => {
	const d = validDraft();
	d.keywords = ["Vote"];
	assert.ok(validateDraft(d).some((p) => p.includes("lowercase")));
	d.keywords = ["vote"];
	assert.deepEqual(validateDraft(d), []);
});

test("keywords may satisfy routing on their own", () => {
	const d = validDraft();
	d.urlPatterns = [];
	assert.deepEqual(validateDraft(d), []);
	d.keywords = [];
	assert.ok(validateDraft(d).some((p) => p.includes("url_patterns or keywords")));
});

test("guard built from the dropdown values always names a real action", () => {
	for (const action of ACTION_NAMES) {
		for (const kind of GUARD_KINDS) {
			const d = validDraft();
			d.guard = { kind, action, args: "", urlPattern: "*" };
			assert.deepEqual(validateDraft(d), [], `${kind} ${action}`);
		}
	}
});

test("guard problems: bad kind, empty url pattern", () => {
	const d = validDraft();
	d.guard = { kind: "suggest", action: "click", args: "", urlPattern: "*" };
	assert.ok(validateDraft(d).some((p) => p.includes("guard kind")));
	d.guard = { kind: "forbid", action: "click", args: "", urlPattern: "" };
	assert.ok(validateDraft(d).some((p) => p.includes("guard url pattern")));
});

test("argument globs wrap in parentheses, bare actions stay bare", () => {
	assert.equal(composeActionPattern({ kind: "forbid", action: "click", args: "", urlPattern: "*" }), "click");
	assert.equal(
		composeActionPattern({ kind: "forbid", action: "click", args: `"2?"*`, urlPattern: "*" }),
		`click("2?"*)`,
	);
});

test("draft to document: optional fields omitted when absent", () => {
	const doc = draftToDoc(validDraft());
	assert.equal(doc.id, "forum-vote-toggle");
	assert.ok(!("guard" in doc));
	assert.ok(!("source_failure_id" in doc));
});

test("draft to document: guard and source failure carried through", () => {
	const d = validDraft();
	d.guard = { kind: "forbid", action: "goto", args: "*login*", urlPattern: "http://forum.mock/*" };
	d.sourceFailureId = "t10-full";
	const doc = draftToDoc(d);
	assert.deepEqual(doc.guard, {
		kind: "forbid",
		action_pattern: "goto(*login*)",
		url_pattern: "http://forum.mock/*",
	});
	assert.equal(doc.source_failure_id, "t10-full");
});

test("whitespace is trimmed into the document", () => {
	const d = validDraft();
	d.id = "  padded-id  ";
	d.scope = " padded scope ";
	const doc = draftToDoc(d);
	assert.equal(doc.id, "padded-id");
	assert.equal(doc.scope, "padded scope");
});

test("splitList takes commas and newlines, drops blanks", () => {
	assert.deepEqual(splitList("vote, upvote\ncomment"), ["vote", "upvote", "comment"]);
	assert.deepEqual(splitList("  \n , "), []);
	assert.deepEqual(splitList(""), []);
});
