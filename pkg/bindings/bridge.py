#!/usr/bin/env python3
"""JSON-lines stdio bridge exposing one similarity-search index.

Each process owns a single index context; the host-language wrapper spawns
one process per bound index and tears it down to free resources.  Data
points cross the boundary in the same text serialization as data files.

Request:  {"id": 1, "op": "addPoint", "payload": "1.0 2.0", "externId": "a"}
Response: {"id": 1, "ok": true, "result": {...}}
          {"id": 1, "ok": false, "error": "..."}
"""
import json
import sys

from simsearch import (DataSet, KnnQuery, ObjectRecord, ParamMap,
                       create_method, create_space)


class BridgeState:
    def __init__(self):
        self.space = None
        self.method_name = None
        self.records = []
        self.extern_ids = []
        self.index = None

    # -- operations ------------------------------------------------------
    def op_init(self, req):
        self.space = create_space(
            req["space"] + (":" + req["spaceParams"] if req.get("spaceParams") else ""),
            req.get("distType", "float"))
        self.method_name = req["method"]
        self.records = []
        self.extern_ids = []
        self.index = None
        return {}

    def _require_init(self):
        if self.space is None:
            raise RuntimeError("call init first")

    def op_addPoint(self, req):
        self._require_init()
        if self.index is not None:
            raise RuntimeError("index already created; points are frozen")
        label, payload = self.space.parse_line(req["payload"])
        extern = req.get("externId", "")
        self.records.append(
            ObjectRecord(len(self.records), payload, label, extern))
        self.extern_ids.append(extern)
        return {"id": len(self.records) - 1}

    def op_createIndex(self, req):
        self._require_init()
        data = DataSet(self.records, self.space.name, self.space.param_text)
        self.index = create_method(self.method_name, self.space, data)
        self.index.create_index(ParamMap.parse(req.get("params", "")))
        return {"count": len(self.records)}

    def op_setQueryTimeParams(self, req):
        self._require_built()
        self.index.set_query_time_params(ParamMap.parse(req.get("params", "")))
        return {}

    def _require_built(self):
        if self.index is None:
            raise RuntimeError("call createIndex (or loadIndex) first")

    def op_knnQuery(self, req):
        self._require_built()
        k = int(req["k"])
        if k < 1:
            raise ValueError("k must be >= 1")
        _, payload = self.space.parse_line(req["payload"])
        query = KnnQuery(self.space, ObjectRecord(-1, payload), k)
        self.index.search(query)
        rows = query.results()
        return {
            "ids": [obj_id for _, obj_id, _ in rows],
            "distances": [dist for dist, _, _ in rows],
            "externIds": [self.extern_ids[obj_id] for _, obj_id, _ in rows],
            "distComp": query.dist_count,
        }

    def op_saveIndex(self, req):
        self._require_built()
        self.index.save_index(req["path"])
        return {}

    def op_loadIndex(self, req):
        self._require_init()
        data = DataSet(self.records, self.space.name, self.space.param_text)
        self.index = create_method(self.method_name, self.space, data)
        self.index.load_index(req["path"])
        return {}


def main():
    state = BridgeState()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            print(json.dumps({"id": None, "ok": False,
                              "error": f"bad request: {exc}"}), flush=True)
            continue
        req_id = req.get("id")
        op = req.get("op", "")
        handler = getattr(state, f"op_{op}", None)
        try:
            if handler is None:
                raise ValueError(f"unknown op {op!r}")
            result = handler(req)
            print(json.dumps({"id": req_id, "ok": True, "result": result}),
                  flush=True)
        except Exception as exc:
            print(json.dumps({"id": req_id, "ok": False, "error": str(exc)}),
                  flush=True)


if __name__ == "__main__":
    main()
