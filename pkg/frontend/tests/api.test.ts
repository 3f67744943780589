import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiError, Client } from "../src/api.js";
import { longTrajectory, makeFetchStub, pageHandler } from "./helpers.js";
import type { TipDoc } from "../src/types.js";

test("token rides every request as X-Auth-Token", async () => {
	const stub = makeFetchStub(() => ({ body: [] }));
	const c = new Client({ baseUrl: "http://svc.test", token: "sekrit" }, stub.fetch);
	await c.tips();
	await c.failures("open");
	assert.equal(stub.requests.length, 2);
	for (const req of stub.requests) {
		assert.equal(req.headers["x-auth-token"], "sekrit");
	}
});

test("no token header when unconfigured, json content type only with a body", async () => {
	const stub = makeFetchStub(() => ({ body: {} }));
	const c = new Client({ baseUrl: "http://svc.test" }, stub.fetch);
	await c.stats();
	await c.launch({ task_id: "t01" });
	assert.ok(!("x-auth-token" in stub.requests[0].headers));
	assert.ok(!("content-type" in stub.requests[0].headers));
	assert.equal(stub.requests[1].headers["content-type"], "application/json");
});

test("trailing slash on the base url is trimmed", async () => {
	const stub = makeFetchStub(() => ({ body: { status: "ok", version: "0" } }));
	const c = new Client({ baseUrl: "http://svc.test///" }, stub.fetch);
	await c.health();
	assert.equal(stub.requests[0].url, "http://svc.test/health");
});

test("error bodies surface as ApiError with code and status", async () => {
	const stub = makeFetchStub(() => ({
		status: 409,
		body: { code: "frozen", message: "knowledge base is frozen", detail: null },
	}));
	const c = new Client({ baseUrl: "http://svc.test" }, stub.fetch);
	const doc = { id: "x", scope: "s" } as TipDoc;
	await assert.rejects(c.createTip(doc), (err: unknown) => {
		assert.ok(err instanceof ApiError);
		assert.equal(err.status, 409);
		assert.equal(err.code, "frozen");
		assert.equal(err.message, "knowledge base is frozen");
		return true;
	});
});

test("non-json error responses still raise ApiError", async () => {
	const impl = () => Promise.resolve(new Response("boom", { status: 500 }));
	const c = new Client({ baseUrl: "http://svc.test" }, impl);
	await assert.rejects(c.health(), (err: unknown) => {
		assert.ok(err instanceof ApiError);
		assert.equal(err.code, "http_error");
		return true;
	});
});

test("delete resolves on 204 with no body", async () => {
	const stub = makeFetchStub(() => ({ status: 204 }));
	const c = new Client({ baseUrl: "http://svc.test" }, stub.fetch);
	await c.deleteTip("old-tip");
	assert.equal(stub.requests[0].method, "DELETE");
	assert.equal(stub.requests[0].url, "http://svc.test/tips/old-tip");
});

test("allEvents walks the cursor across a 30 step run", async () => {
	const events = longTrajectory(30);
	const stub = makeFetchStub(pageHandler("big-run", "failure", events));
	const c = new Client({ baseUrl: "http://svc.test" }, stub.fetch);
	const got = await c.allEvents("big-run", 7);
	assert.equal(got.events.length, events.length);
	assert.deepEqual(got.events, events);
	assert.equal(got.status, "failure");
	assert.equal(got.total, events.length);
	// every fetched page except the final empty one carries 7 events
	assert.ok(stub.requests.length >= Math.ceil(events.length / 7));
	const steps = new Set(got.events.map((e) => e.step));
	assert.equal(steps.size, 30);
});

test("allEvents on an empty run makes one request", async () => {
	const stub = makeFetchStub(pageHandler("empty", "running", []));
	const c = new Client({ baseUrl: "http://svc.test" }, stub.fetch);
	const got = await c.allEvents("empty");
	assert.deepEqual(got.events, []);
	assert.equal(got.status, "running");
	assert.equal(stub.requests.length, 1);
});

test("screenshot urls point into the run directory", () => {
	const c = new Client({ baseUrl: "http://svc.test" }, makeFetchStub(() => undefined).fetch);
	assert.equal(
		c.screenshotUrl("t10-full", "ab".repeat(32)),
		`http://svc.test/runs/t10-full/screenshots/${"ab".repeat(32)}`,
	);
});
