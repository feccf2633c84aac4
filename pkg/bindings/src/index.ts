/**
 * Thin wrapper over the simsearch engine.
 *
 * Each BoundIndex owns one engine process, reached over a JSON-lines stdio
 * protocol.  Data points cross the boundary in the same text serialization
 * as the engine's data files: dense vectors as space-separated numbers,
 * strings verbatim.  Only the nearest-neighbor search is exposed.
 */
import { spawn, ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, Interface } from "node:readline";
import { fileURLToPath } from "node:url";
import path from "node:path";

const BRIDGE_PATH = path.join(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "bridge.py",
);

export interface InitOptions {
  spaceType: string;
  spaceParams?: string;
  method: string;
  distType?: "int" | "float" | "double";
  pythonBin?: string;
}

export interface KnnResult {
  ids: number[];
  distances: number[];
  externIds: string[];
  distComp: number;
}

interface BridgeResponse {
  id: number;
  ok: boolean;
  result?: unknown;
  error?: string;
}

/** Serialize a payload: number arrays become dense text rows. */
export function encodePayload(payload: string | number[]): string {
  if (typeof payload === "string") {
    return payload;
  }
  return payload.map((v) => v.toString()).join(" ");
}

export class BoundIndex {
  private proc: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private nextId = 1;
  private pending = new Map<
    number,
    { resolve: (v: unknown) => void; reject: (e: Error) => void }
  >();
  private closed = false;

  private constructor(pythonBin: string) {
    this.proc = spawn(pythonBin, [BRIDGE_PATH], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    this.lines = createInterface({ input: this.proc.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    this.proc.on("exit", () => {
      this.closed = true;
      for (const { reject } of this.pending.values()) {
        reject(new Error("engine process exited"));
      }
      this.pending.clear();
    });
  }

  private onLine(line: string): void {
    let resp: BridgeResponse;
    try {
      resp = JSON.parse(line) as BridgeResponse;
    } catch {
      return;
    }
    const waiter = this.pending.get(resp.id);
    if (!waiter) {
      return;
    }
    this.pending.delete(resp.id);
    if (resp.ok) {
      waiter.resolve(resp.result);
    } else {
      waiter.reject(new Error(resp.error ?? "engine error"));
    }
  }

  private call(op: string, fields: Record<string, unknown>): Promise<unknown> {
    if (this.closed) {
      return Promise.reject(new Error("index already freed"));
    }
    const id = this.nextId++;
    const message = JSON.stringify({ id, op, ...fields });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.proc.stdin.write(message + "\n");
    });
  }

  /** Start an engine process and initialize an empty index context. */
  static async init(options: InitOptions): Promise<BoundIndex> {
    const index = new BoundIndex(options.pythonBin ?? "python3");
    await index.call("init", {
      space: options.spaceType,
      spaceParams: options.spaceParams ?? "",
      method: options.method,
      distType: options.distType ?? "float",
    });
    return index;
  }

  /** Add one data point; returns its ordinal id. */
  async addPoint(
    payload: string | number[],
    externId?: string,
  ): Promise<number> {
    const result = (await this.call("addPoint", {
      payload: encodePayload(payload),
      externId: externId ?? "",
    })) as { id: number };
    return result.id;
  }

  /** Build the index over the added points, e.g. "M=10,efConstruction=200". */
  async createIndex(params = ""): Promise<void> {
    await this.call("createIndex", { params });
  }

  /** Reset query-time parameters to defaults, then apply the given ones. */
  async setQueryTimeParams(params = ""): Promise<void> {
    await this.call("setQueryTimeParams", { params });
  }

  /** k nearest neighbors of the query payload. */
  async knnQuery(payload: string | number[], k: number): Promise<KnnResult> {
    if (!Number.isInteger(k) || k < 1) {
      throw new Error(`k must be a positive integer, got ${k}`);
    }
    return (await this.call("knnQuery", {
      payload: encodePayload(payload),
      k,
    })) as KnnResult;
  }

  /** Persist the built index (methods without persistence reject). */
  async saveIndex(location: string): Promise<void> {
    await this.call("saveIndex", { path: location });
  }

  /** Load a previously saved index over the same added points. */
  async loadIndex(location: string): Promise<void> {
    await this.call("loadIndex", { path: location });
  }

  /** Terminate the engine process; the handle becomes unusable. */
  free(): void {
    if (!this.closed) {
      this.closed = true;
      this.proc.stdin.end();
      this.proc.kill();
    }
  }
}

export const init = BoundIndex.init;
