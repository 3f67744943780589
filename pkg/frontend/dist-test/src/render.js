/**
 * DOM builders. Everything renders from scratch out of the models passed in;
 * reloading the page and refetching must always reproduce the same view.
 */
import { ACTION_NAMES, GUARD_KINDS, draftToDoc, emptyDraft, splitList, validateDraft } from "./editor.js";
function el(tag, attrs = {}, children = []) {
    const node = document.createElement(tag);
    for (const [k, v] of Object.entries(attrs)) {
        if (k === "class")
            node.className = v;
        else
            node.setAttribute(k, v);
    }
    for (const c of children) {
        node.append(typeof c === "string" ? document.createTextNode(c) : c);
    }
    return node;
}
function verdictBadge(v) {
    return el("span", { class: "badge verdict-badge", "data-source": v.source }, [v.source]);
}
function renderStep(step, screenshotUrl) {
    const cls = ["step"];
    if (step.firing)
        cls.push("firing");
    if (step.inLoopGroup)
        cls.push("looped");
    const box = el("section", { class: cls.join(" "), "data-step": String(step.step) });
    const head = [el("span", { class: "step-no" }, [`step ${step.step}`])];
    if (step.url !== null)
        head.push(el("span", { class: "step-url" }, [step.url]));
    if (step.firing && step.verdict)
        head.push(verdictBadge(step.verdict));
    box.append(el("header", {}, head));
    if (step.screenshot !== null) {
        // only runs that recorded screenshots get an img; no placeholders
        box.append(el("img", { class: "shot", src: screenshotUrl(step.screenshot), alt: `step ${step.step}` }));
    }
    if (step.axExcerpt !== null) {
        const suffix = step.axTruncated ? "\n..." : "";
        box.append(el("pre", { class: "ax" }, [step.axExcerpt + suffix]));
    }
    if (step.retrievedTipIds.length > 0) {
        box.append(el("div", { class: "retrieved" }, [`tips: ${step.retrievedTipIds.join(", ")}`]));
    }
    if (step.think !== null) {
        box.append(el("blockquote", { class: "think" }, [step.think]));
    }
    if (step.action !== null) {
        box.append(el("div", { class: "action" }, [el("code", {}, [step.action])]));
    }
    if (step.actError !== null) {
        box.append(el("div", { class: "act-error" }, [`${step.actError.kind}: ${step.actError.detail}`]));
    }
    if (step.envNote !== null) {
        box.append(el("div", { class: "env-note" }, [step.envNote]));
    }
    if (step.firing && step.verdict) {
        box.append(el("div", { class: "verdict-detail" }, [step.verdict.detail]));
    }
    return box;
}
function renderReview(model, screenshotUrl) {
    const root = el("div", { class: "review" });
    const head = [
        el("h2", {}, [model.runId]),
        el("span", { class: `status status-${model.status}` }, [model.status]),
    ];
    if (model.firingVerdict)
        head.push(verdictBadge(model.firingVerdict));
    root.append(el("header", { class: "review-head" }, head));
    if (model.loopGroup) {
        const g = model.loopGroup;
        root.append(el("div", { class: "loop-group" }, [
            el("span", { class: "loop-label" }, [`repeated ${g.steps.length} times at steps ${g.steps.join(", ")}`]),
            el("code", {}, [g.action]),
        ]));
    }
    const list = el("div", { class: "steps" });
    for (const step of model.steps)
        list.append(renderStep(step, screenshotUrl));
    root.append(list);
    return root;
}
function renderFailureList(entries, onOpen) {
    const root = el("div", { class: "failures" });
    if (entries.length === 0) {
        root.append(el("p", { class: "empty" }, ["no failures"]));
        return root;
    }
    const ul = el("ul", { class: "failure-list" });
    for (const entry of entries) {
        const parts = [
            el("a", { href: `#/failures/${entry.id}`, class: "failure-id" }, [entry.id]),
            el("span", { class: `failure-status failure-${entry.status}` }, [entry.status]),
        ];
        if (entry.verdict)
            parts.push(verdictBadge(entry.verdict));
        const li = el("li", { "data-id": entry.id }, parts);
        li.addEventListener("click", (evt) => {
            evt.preventDefault();
            onOpen(entry.id);
        });
        ul.append(li);
    }
    root.append(ul);
    return root;
}
const FROZEN_NOTICE = "knowledge base is frozen: tips are read only until it is unfrozen on disk";
function renderTipEditor(opts) {
    const draft = opts.draft ?? emptyDraft();
    const root = el("form", { class: "tip-editor" });
    root.addEventListener("submit", (evt) => evt.preventDefault());
    if (opts.frozen) {
        root.append(el("p", { class: "frozen-notice" }, [FROZEN_NOTICE]));
    }
    const field = (label, input) => el("label", { class: "field" }, [el("span", {}, [label]), input]);
    const text = (name, value, onInput) => {
        const input = el("input", { type: "text", name, value });
        input.addEventListener("input", () => {
            onInput(input.value);
            refresh();
        });
        return input;
    };
    const area = (name, value, onInput) => {
        const input = el("textarea", { name });
        input.value = value;
        input.addEventListener("input", () => {
            onInput(input.value);
            refresh();
        });
        return input;
    };
    root.append(field("id", text("id", draft.id, (v) => (draft.id = v))));
    root.append(field("domain", text("domain_label", draft.domainLabel, (v) => (draft.domainLabel = v))));
    root.append(field("scope", area("scope", draft.scope, (v) => (draft.scope = v))));
    root.append(field("action guidance", area("action_guidance", draft.actionGuidance, (v) => (draft.actionGuidance = v))));
    root.append(field("constraint", area("constraint", draft.constraint, (v) => (draft.constraint = v))));
    root.append(field("goal alignment", area("goal_alignment", draft.goalAlignment, (v) => (draft.goalAlignment = v))));
    root.append(field("url patterns (one per line)", area("url_patterns", draft.urlPatterns.join("\n"), (v) => (draft.urlPatterns = splitList(v)))));
    root.append(field("keywords (comma separated)", text("keywords", draft.keywords.join(", "), (v) => (draft.keywords = splitList(v)))));
    // guard composer: dropdowns only, so the pattern stays inside the grammar
    const guardToggle = el("input", { type: "checkbox", name: "guard_enabled" });
    const kindSel = el("select", { name: "guard_kind" });
    for (const k of GUARD_KINDS)
        kindSel.append(el("option", { value: k }, [k]));
    const actionSel = el("select", { name: "guard_action" });
    for (const a of ACTION_NAMES)
        actionSel.append(el("option", { value: a }, [a]));
    const argsInput = el("input", { type: "text", name: "guard_args", placeholder: "argument glob, e.g. \"2?\"*" });
    const guardUrl = el("input", { type: "text", name: "guard_url", value: "*" });
    const guardRow = el("div", { class: "guard-row" }, [kindSel, actionSel, argsInput, guardUrl]);
    if (draft.guard) {
        guardToggle.checked = true;
        kindSel.value = draft.guard.kind;
        actionSel.value = draft.guard.action;
        argsInput.value = draft.guard.args;
        guardUrl.value = draft.guard.urlPattern;
    }
    const syncGuard = () => {
        draft.guard = guardToggle.checked
            ? { kind: kindSel.value, action: actionSel.value, args: argsInput.value, urlPattern: guardUrl.value }
            : null;
        refresh();
    };
    for (const ctl of [guardToggle, kindSel, actionSel, argsInput, guardUrl]) {
        ctl.addEventListener("change", syncGuard);
        ctl.addEventListener("input", syncGuard);
    }
    root.append(el("div", { class: "guard" }, [field("guard", guardToggle), guardRow]));
    const problemsBox = el("ul", { class: "problems" });
    const submit = el("button", { type: "submit", class: "submit" }, ["save tip"]);
    submit.addEventListener("click", (evt) => {
        evt.preventDefault();
        if (opts.frozen)
            return;
        if (validateDraft(draft).length > 0)
            return;
        opts.onSubmit(draftToDoc(draft));
    });
    root.append(problemsBox, submit);
    const refresh = () => {
        const problems = validateDraft(draft);
        problemsBox.replaceChildren(...problems.map((p) => el("li", {}, [p])));
        submit.disabled = opts.frozen || problems.length > 0;
    };
    refresh();
    if (opts.frozen) {
        for (const ctl of root.querySelectorAll("input, textarea, select, button")) {
            ctl.disabled = true;
        }
    }
    return root;
}
export { FROZEN_NOTICE, el, renderFailureList, renderReview, renderStep, renderTipEditor };
