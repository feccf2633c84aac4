import { execFileSync } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";

import { BoundIndex, encodePayload, init } from "./index.js";

const FIXTURE_SCRIPT = path.join(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "tests",
  "make_fixture.py",
);

interface Fixture {
  spaceType: string;
  distType: "int" | "float" | "double";
  method: string;
  createParams: string;
  queryParams: string;
  k: number;
  points: string[];
  queries: string[];
  expected: { ids: number[]; distances: number[] }[];
}

function loadFixture(kind: "l2" | "leven"): Fixture {
  const raw = execFileSync("python3", [FIXTURE_SCRIPT, kind], {
    maxBuffer: 64 * 1024 * 1024,
  });
  return JSON.parse(raw.toString()) as Fixture;
}

const handles: BoundIndex[] = [];

async function boundFromFixture(fixture: Fixture): Promise<BoundIndex> {
  const index = await init({
    spaceType: fixture.spaceType,
    method: fixture.method,
    distType: fixture.distType,
  });
  handles.push(index);
  for (const point of fixture.points) {
    await index.addPoint(point);
  }
  await index.createIndex(fixture.createParams);
  await index.setQueryTimeParams(fixture.queryParams);
  return index;
}

afterAll(() => {
  for (const h of handles) {
    h.free();
  }
});

describe("BoundIndex basics", () => {
  it("answers a one-point index with distance zero", async () => {
    const index = await init({ spaceType: "l2", method: "seq_search" });
    handles.push(index);
    await index.addPoint([1, 2, 3], "only");
    await index.createIndex();
    const res = await index.knnQuery([1, 2, 3], 1);
    expect(res.ids).toEqual([0]);
    expect(res.distances[0]).toBe(0);
    expect(res.externIds).toEqual(["only"]);
  });

  it("rejects unknown spaces", async () => {
    await expect(
      init({ spaceType: "warp_space", method: "seq_search" }),
    ).rejects.toThrow(/unknown space/);
  });

  it("supports generic string-serialized spaces", async () => {
    const index = await init({
      spaceType: "leven",
      method: "seq_search",
      distType: "int",
    });
    handles.push(index);
    for (const w of ["karma", "karla", "dharma", "drama"]) {
      await index.addPoint(w);
    }
    await index.createIndex();
    const res = await index.knnQuery("karmas", 2);
    expect(res.ids).toEqual([0, 1]);
    expect(res.distances).toEqual([1, 2]);
  });

  it("rejects a query before the index is built", async () => {
    const index = await init({ spaceType: "l2", method: "seq_search" });
    handles.push(index);
    await index.addPoint([0, 0]);
    await expect(index.knnQuery([0, 0], 1)).rejects.toThrow(/createIndex/);
  });

  it("rejects k = 0", async () => {
    const index = await init({ spaceType: "l2", method: "seq_search" });
    handles.push(index);
    await index.addPoint([0, 0]);
    await index.createIndex();
    await expect(index.knnQuery([0, 0], 0)).rejects.toThrow(/positive/);
  });

  it("encodes numeric payloads as dense text rows", () => {
    expect(encodePayload([1, 2.5, -3])).toBe("1 2.5 -3");
    expect(encodePayload("raw text")).toBe("raw text");
  });

  it("save/load round-trips through the wrapper", async () => {
    const fixture = loadFixture("l2");
    const small = { ...fixture, points: fixture.points.slice(0, 200) };
    const index = await boundFromFixture(small);
    const location = path.join(mkdtempSync(path.join(tmpdir(), "sb-")), "h.idx");
    await index.saveIndex(location);
    const reloaded = await init({
      spaceType: small.spaceType,
      method: small.method,
      distType: small.distType,
    });
    handles.push(reloaded);
    for (const point of small.points) {
      await reloaded.addPoint(point);
    }
    await reloaded.loadIndex(location);
    await reloaded.setQueryTimeParams(small.queryParams);
    const a = await index.knnQuery(small.queries[0], 5);
    const b = await reloaded.knnQuery(small.queries[0], 5);
    expect(b.ids).toEqual(a.ids);
    expect(b.distances).toEqual(a.distances);
  });

  it("becomes unusable after free", async () => {
    const index = await init({ spaceType: "l2", method: "seq_search" });
    index.free();
    await expect(index.addPoint([0])).rejects.toThrow(/freed|exited/);
  });
});

describe("equivalence with the core engine", () => {
  it("matches core results for l2 + hnsw", async () => {
    const fixture = loadFixture("l2");
    const index = await boundFromFixture(fixture);
    for (let qi = 0; qi < fixture.queries.length; qi++) {
      const got = await index.knnQuery(fixture.queries[qi], fixture.k);
      const want = fixture.expected[qi];
      expect(got.ids).toEqual(want.ids);
      for (let j = 0; j < want.distances.length; j++) {
        expect(Math.abs(got.distances[j] - want.distances[j])).toBeLessThanOrEqual(
          1e-6 * Math.max(1, Math.abs(want.distances[j])),
        );
      }
    }
  }, 120_000);

  it("matches core results for leven + sw-graph", async () => {
    const fixture = loadFixture("leven");
    const index = await boundFromFixture(fixture);
    for (let qi = 0; qi < fixture.queries.length; qi++) {
      const got = await index.knnQuery(fixture.queries[qi], fixture.k);
      const want = fixture.expected[qi];
      expect(got.ids).toEqual(want.ids);
      expect(got.distances).toEqual(want.distances);
    }
  }, 120_000);
});
