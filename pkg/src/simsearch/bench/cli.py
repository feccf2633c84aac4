"""The ``experiment`` command-line utility."""
from __future__ import annotations

import argparse
import logging
import sys

from .runner import ExperimentConfig, run_experiment
from .reports import format_report_block


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="experiment",
        description="Benchmark a similarity-search method against exact "
                    "brute force on a data set.")
    p.add_argument("-s", "--spaceType", required=True,
                   help="space type, e.g., l1, l2, lp:p=0.25")
    p.add_argument("--distType", default="float",
                   choices=["int", "float", "double"],
                   help="distance value type (default float)")
    p.add_argument("-i", "--dataFile", required=True, help="input data file")
    p.add_argument("-D", "--maxNumData", type=int, default=0,
                   help="if non-zero, use only the first maxNumData elements")
    p.add_argument("-q", "--queryFile", default=None, help="query file")
    p.add_argument("-Q", "--maxNumQuery", type=int, default=0,
                   help="if non-zero, use maxNumQuery query elements "
                        "(required when bootstrapping)")
    p.add_argument("-b", "--testSetQty", type=int, default=0,
                   help="number of sets created by bootstrapping")
    p.add_argument("--threadTestQty", type=int, default=1,
                   help="number of threads during querying")
    p.add_argument("-k", "--knn", default="",
                   help="comma-separated values of k for the k-NN search")
    p.add_argument("-r", "--range", default="",
                   help="comma-separated radii for the range search")
    p.add_argument("-m", "--method", required=True, help="method/index name")
    p.add_argument("-c", "--createIndex", default="",
                   help="index-time method parameters")
    p.add_argument("-t", "--queryTimeParams", action="append", default=[],
                   help="query-time method parameters (repeatable)")
    p.add_argument("-L", "--loadIndex", default=None,
                   help="a location to load the index from")
    p.add_argument("-S", "--saveIndex", default=None,
                   help="a location to save the index to")
    p.add_argument("-g", "--cachePrefixGS", default=None,
                   help="a prefix of gold standard cache files")
    p.add_argument("--maxCacheGSRelativeQty", type=int, default=10,
                   help="maximum number of gold standard entries relative to "
                        "the result size")
    p.add_argument("-o", "--outFilePrefix", default=None,
                   help="output file prefix")
    p.add_argument("-a", "--appendToResFile", action="store_true",
                   help="do not override information in result files")
    p.add_argument("-l", "--logFile", default=None, help="log file")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    knn = [int(x) for x in args.knn.split(",") if x.strip()]
    ranges = [float(x) for x in args.range.split(",") if x.strip()]
    return ExperimentConfig(
        space_type=args.spaceType,
        dist_type=args.distType,
        data_file=args.dataFile,
        max_num_data=args.maxNumData,
        query_file=args.queryFile,
        max_num_query=args.maxNumQuery,
        test_set_qty=args.testSetQty,
        knn=knn,
        range=ranges,
        method=args.method,
        create_index=args.createIndex,
        query_time_params=list(args.queryTimeParams),
        thread_test_qty=args.threadTestQty,
        cache_prefix_gs=args.cachePrefixGS,
        max_cache_gs_relative_qty=args.maxCacheGSRelativeQty,
        out_file_prefix=args.outFilePrefix,
        append_to_res_file=args.appendToResFile,
        load_index=args.loadIndex,
        save_index=args.saveIndex,
        log_file=args.logFile,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not args.logFile:
        logging.basicConfig(stream=sys.stderr, level=logging.INFO)
    config = config_from_args(args)
    try:
        rows = run_experiment(config)
    except Exception as exc:
        print(f"FATAL: {exc}", file=sys.stderr)
        return 1
    for suffix, result_rows in rows.items():
        print(f"===== {suffix} =====")
        for row in result_rows:
            print(format_report_block(row))
    return 0


if __name__ == "__main__":
    sys.exit(main())
