/**
 * Tip editor model: draft state, the client-side mirror of the service's
 * tip validation, and the guard composer. The composer only offers action
 * names the runtime grammar knows, so a guard built here cannot name an
 * unknown action.
 */
// Grammar action names, in grammar order. Must track the service.
const ACTION_NAMES = [
    "click", "hover", "type", "press", "scroll", "goto", "go_back",
    "go_forward", "new_tab", "tab_focus", "tab_close", "take_note",
    "calculate", "stop",
];
const GUARD_KINDS = ["forbid", "require"];
function emptyDraft() {
    return {
        id: "", domainLabel: "", scope: "", actionGuidance: "",
        constraint: "", goalAlignment: "", urlPatterns: [], keywords: [],
        guard: null, sourceFailureId: null,
    };
}
function composeActionPattern(g) {
    const args = g.args.trim();
    return args ? `${g.action}(${args})` : g.action;
}
const ACTION_PATTERN_NAME = /^([a-z_]+)(\(|$)/;
/** Same rules the service enforces; one message per broken rule. */
function validateDraft(d) {
    const problems = [];
    if (!d.id.trim())
        problems.push("id must be non-empty");
    if (!d.scope.trim())
        problems.push("scope must be non-empty");
    if (!d.actionGuidance.trim())
        problems.push("action_guidance must be non-empty");
    if (d.urlPatterns.length === 0 && d.keywords.length === 0) {
        problems.push("at least one of url_patterns or keywords is required");
    }
    for (const kw of d.keywords) {
        if (!kw || kw !== kw.toLowerCase()) {
            problems.push(`keyword ${JSON.stringify(kw)} must be non-empty lowercase`);
        }
    }
    for (const pat of d.urlPatterns) {
        if (!pat)
            problems.push("url patterns must be non-empty");
    }
    if (d.guard !== null) {
        if (!GUARD_KINDS.includes(d.guard.kind)) {
            problems.push("guard kind must be forbid or require");
        }
        const m = ACTION_PATTERN_NAME.exec(composeActionPattern(d.guard));
        if (!m || !ACTION_NAMES.includes(m[1])) {
            problems.push("guard action pattern must start with a known action name");
        }
        if (!d.guard.urlPattern)
            problems.push("guard url pattern must be non-empty");
    }
    return problems;
}
function splitList(raw) {
    return raw
        .split(/[\n,]/)
        .map((part) => part.trim())
        .filter((part) => part.length > 0);
}
function draftToDoc(d) {
    const doc = {
        id: d.id.trim(),
        domain_label: d.domainLabel.trim(),
        scope: d.scope.trim(),
        action_guidance: d.actionGuidance.trim(),
        constraint: d.constraint.trim(),
        goal_alignment: d.goalAlignment.trim(),
        url_patterns: d.urlPatterns.slice(),
        keywords: d.keywords.slice(),
    };
    // optional fields are omitted, not sent as nulls; matches the stored form
    if (d.guard !== null) {
        const guard = {
            kind: d.guard.kind,
            action_pattern: composeActionPattern(d.guard),
            url_pattern: d.guard.urlPattern,
        };
        doc.guard = guard;
    }
    if (d.sourceFailureId !== null)
        doc.source_failure_id = d.sourceFailureId;
    return doc;
}
export { ACTION_NAMES, GUARD_KINDS, composeActionPattern, draftToDoc, emptyDraft, splitList, validateDraft };
