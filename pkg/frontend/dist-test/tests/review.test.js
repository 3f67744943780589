import assert from "node:assert/strict";
import { test } from "node:test";
import { AX_EXCERPT_LINES, buildReview } from "../src/review.js";
import { loopTrajectory, longTrajectory, stepEvents } from "./helpers.js";
test("loop trajectory: firing step carries the rule_loop verdict", () => {
    const model = buildReview("t10-full", "failure", loopTrajectory());
    assert.equal(model.steps.length, 4);
    assert.equal(model.firingStep, 3);
    assert.equal(model.firingVerdict?.source, "rule_loop");
    const firing = model.steps[3];
    assert.ok(firing.firing);
    assert.equal(firing.verdict?.source, "rule_loop");
    for (const n of [0, 1, 2])
        assert.ok(!model.steps[n].firing);
});
test("loop trajectory: the three repeated actions group together", () => {
    const model = buildReview("t10-full", "failure", loopTrajectory());
    assert.ok(model.loopGroup);
    assert.deepEqual(model.loopGroup.steps, [1, 2, 3]);
    assert.equal(model.loopGroup.action, `click("10")`);
    assert.deepEqual(model.steps.map((s) => s.inLoopGroup), [false, true, true, true]);
});
test("no screenshots recorded means none in the model", () => {
    const model = buildReview("t10-full", "failure", loopTrajectory());
    assert.equal(model.hasScreenshots, false);
    for (const s of model.steps)
        assert.equal(s.screenshot, null);
});
test("screenshot refs come through per step", () => {
    const model = buildReview("t10-full", "failure", loopTrajectory({ screenshots: true }));
    assert.equal(model.hasScreenshots, true);
    for (const s of model.steps)
        assert.ok(s.screenshot);
});
test("step fields: url, think, action, env note", () => {
    const model = buildReview("t10-full", "failure", loopTrajectory());
    const s = model.steps[1];
    assert.equal(s.url, "http://forum.mock/f/pittsburgh/129/local-issues-thread");
    assert.equal(s.action, `click("10")`);
    assert.equal(s.think, "maybe the title row reveals a vote control");
    assert.equal(s.envNote, "ineffective action");
    assert.equal(s.envOk, true);
});
test("long ax trees are excerpted with a truncation flag", () => {
    const lines = Array.from({ length: 40 }, (_, i) => `  [${i}] link 'Row ${i}'`);
    const events = stepEvents(0, { axTree: `RootWebArea 'Big'\n${lines.join("\n")}` });
    const model = buildReview("r", "success", events);
    const s = model.steps[0];
    assert.ok(s.axTruncated);
    assert.equal(s.axExcerpt?.split("\n").length, AX_EXCERPT_LINES);
});
test("short ax trees pass through whole", () => {
    const model = buildReview("r", "success", stepEvents(0, {}));
    assert.equal(model.steps[0].axTruncated, false);
    assert.ok(model.steps[0].axExcerpt?.startsWith("RootWebArea"));
});
test("a parse failure shows as an act error with no action", () => {
    const events = stepEvents(2, { actError: { kind: "ParseFailure", detail: "no action found" } });
    const model = buildReview("r", "failure", events);
    const s = model.steps[0];
    assert.equal(s.action, null);
    assert.deepEqual(s.actError, { kind: "ParseFailure", detail: "no action found" });
});
test("retrieved tip ids are listed on the step", () => {
    const events = stepEvents(0, { tipIds: ["tip-a", "tip-b"] });
    const model = buildReview("r", "success", events);
    assert.deepEqual(model.steps[0].retrievedTipIds, ["tip-a", "tip-b"]);
});
test("a thirty step run keeps every step in order", () => {
    const model = buildReview("big", "failure", longTrajectory(30));
    assert.equal(model.steps.length, 30);
    assert.deepEqual(model.steps.map((s) => s.step), Array.from({ length: 30 }, (_, i) => i));
    assert.equal(model.firingStep, null);
    assert.equal(model.loopGroup, null);
});
test("non-loop verdicts do not build a loop group", () => {
    const events = stepEvents(0, {
        verdict: { fired: true, source: "rule_budget", detail: "belief budget exhausted", evidence: [0] },
    });
    const model = buildReview("r", "failure", events);
    assert.equal(model.firingVerdict?.source, "rule_budget");
    assert.equal(model.loopGroup, null);
    assert.ok(model.steps[0].firing);
});
