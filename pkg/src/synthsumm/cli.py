"""Command-line surface for the synthetic-summary pipeline.

Exit codes: 0 success, 1 validation/data error, 2 environment or provider
error, 64 usage error. Every run that writes an output also writes its
resolved configuration next to it as ``<out>.runconfig.json`` so any
artifact can be traced back to the flags that produced it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import concepts as concepts_mod
from . import humaneval as humaneval_mod
from . import manifests as manifests_mod
from . import metrics as metrics_mod
from . import sampler as sampler_mod
from .corpus import CorpusError, load_corpus, save_corpus
from .llm import API_KEY_ENV, LLMClient, MockResponder, ProviderError, SamplingParams
from .prompts import PromptVariant
from .server import DEFAULT_ADMIN_TOKEN_ENV, EvalService, serve_forever

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ENVIRONMENT = 2
EXIT_USAGE = 64

VARIANT_CHOICES = {"direct": PromptVariant.DIRECT,
                   "paraphrase": PromptVariant.PARAPHRASE_PLAIN,
                   "paraphrase-concept": PromptVariant.PARAPHRASE_CONCEPT}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 64, not argparse's 2
        raise UsageError(message)


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--endpoint", default=None,
                        help="chat-completions URL (default: none; use --mock)")
    parser.add_argument("--model", default="gpt-3.5-turbo",
                        help="model id sent to the provider (default: %(default)s)")
    parser.add_argument("--temperature", type=float, default=1.0,
                        help="sampling temperature (default: %(default)s)")
    parser.add_argument("--top-p", type=float, default=1.0,
                        help="nucleus sampling mass (default: %(default)s)")
    parser.add_argument("--max-tokens", type=int, default=256,
                        help="completion token cap (default: %(default)s)")
    parser.add_argument("--concurrency", type=int, default=4,
                        help="max in-flight requests (default: %(default)s)")
    parser.add_argument("--rpm", type=int, default=None,
                        help="requests-per-minute budget (default: unlimited)")
    parser.add_argument("--cache-dir", default=None,
                        help="completion cache directory (default: none)")
    parser.add_argument("--mock", default=None, metavar="SCRIPT",
                        help="offline mock provider; SCRIPT is a JSONL file of "
                             "{prefix, text} entries matched against prompt hashes "
                             "(empty file = pure echo behavior)")
    parser.add_argument("--retry-cap", type=int, default=4,
                        help="max transport attempts per request (default: %(default)s)")
    parser.add_argument("--api-key-env", default=API_KEY_ENV,
                        help="env var holding the API credential (default: %(default)s)")
    parser.add_argument("--system-role", action="store_true",
                        help="send the prompt as a system message instead of user")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="synthsumm",
                     description="Synthetic reference summaries: generation, "
                                 "scoring, manifest assembly, human evaluation.",
                     epilog="Any subcommand also accepts --config FILE, a JSON "
                            "object of flag values applied as defaults "
                            "(explicit flags win).")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_augment = sub.add_parser("augment", help="generate synthetic summaries")
    p_augment.add_argument("--in", dest="in_path", required=True, help="corpus file")
    p_augment.add_argument("--out", required=True, help="augmented output file")
    p_augment.add_argument("--variant", choices=sorted(VARIANT_CHOICES), required=True)
    p_augment.add_argument("--n-per-utt", type=int, default=1,
                           help="samples per utterance (default: %(default)s)")
    p_augment.add_argument("--seed", type=int, default=0,
                           help="top-level run seed (default: %(default)s)")
    p_augment.add_argument("--leniency", choices=concepts_mod.MATCH_MODES,
                           default="prefix4",
                           help="concept-match mode (default: %(default)s)")
    p_augment.add_argument("--max-attempts", type=int,
                           default=sampler_mod.DEFAULT_MAX_ATTEMPTS,
                           help="resamples per out-of-bounds reply (default: %(default)s)")
    p_augment.add_argument("--word-tolerance", type=float,
                           default=sampler_mod.DEFAULT_TOLERANCE,
                           help="soft-accept band beyond the word window "
                                "(default: %(default)s)")
    p_augment.add_argument("--max-concepts", type=int, default=concepts_mod.DEFAULT_MAX_K,
                           help="concept words per summary (default: %(default)s)")
    p_augment.add_argument("--concepts", default=None, metavar="CACHE",
                           help="concept cache file to reuse/write (default: none)")
    p_augment.add_argument("--stopwords", default=None,
                           help="override the shipped stopword list")
    _add_provider_flags(p_augment)

    p_score = sub.add_parser("score", help="lexical metrics for an augmented file")
    p_score.add_argument("--in", dest="in_path", required=True, help="corpus file")
    p_score.add_argument("--aug", required=True, help="augmented summaries file")
    p_score.add_argument("--out", required=True, help="report prefix (.txt/.jsonl)")
    p_score.add_argument("--leniency", choices=concepts_mod.MATCH_MODES,
                         default="prefix4",
                         help="concept-match mode (default: %(default)s)")
    p_score.add_argument("--max-concepts", type=int, default=concepts_mod.DEFAULT_MAX_K,
                         help="concept words per summary (default: %(default)s)")
    p_score.add_argument("--external-scores", default=None,
                         help="side-file of externally computed metric records")
    p_score.add_argument("--stopwords", default=None,
                         help="override the shipped stopword list")

    p_assemble = sub.add_parser("assemble", help="build training manifests")
    p_assemble.add_argument("--in", dest="in_path", required=True, help="corpus file")
    p_assemble.add_argument("--aug", required=True, help="augmented summaries file")
    p_assemble.add_argument("--strategy", required=True,
                            choices=[s.value for s in manifests_mod.Strategy])
    p_assemble.add_argument("--out", required=True, help="output directory")
    p_assemble.add_argument("--seed", type=int, default=0,
                            help="shuffle/coin seed (default: %(default)s)")
    p_assemble.add_argument("--accepted-only", action=argparse.BooleanOptionalAction,
                            default=True,
                            help="use accepted synthetic summaries only")
    p_assemble.add_argument("--exact-half", action="store_true",
                            help="half-half strategy: exact partition instead of "
                                 "per-utterance coin")
    p_assemble.add_argument("--augmented-testset", action="store_true",
                            help="also write a test corpus with synthetic references")

    p_eval_assign = sub.add_parser("eval-assign", help="create blinded assignments")
    p_eval_assign.add_argument("--in", dest="in_path", required=True, help="corpus file")
    p_eval_assign.add_argument("--aug", required=True, help="augmented summaries file")
    p_eval_assign.add_argument("--out", required=True, help="assignments file")
    p_eval_assign.add_argument("--annotators", type=int, default=20,
                               help="number of annotators (default: %(default)s)")
    p_eval_assign.add_argument("--per-annotator", type=int, default=15,
                               help="items per annotator (default: %(default)s)")
    p_eval_assign.add_argument("--seed", type=int, default=0,
                               help="assignment seed (default: %(default)s)")

    p_eval_serve = sub.add_parser("eval-serve", help="run the annotation HTTP service")
    p_eval_serve.add_argument("--assignments", required=True, help="assignments file")
    p_eval_serve.add_argument("--responses", required=True,
                              help="append-only responses file")
    p_eval_serve.add_argument("--port", type=int, default=8765,
                              help="listen port (default: %(default)s)")
    p_eval_serve.add_argument("--admin-token-env", default=DEFAULT_ADMIN_TOKEN_ENV,
                              help="env var holding the report token "
                                   "(default: %(default)s)")
    p_eval_serve.add_argument("--static", default=None,
                              help="directory of UI files to serve at / (default: none)")

    p_eval_aggregate = sub.add_parser("eval-aggregate",
                                      help="aggregate responses into a validity report")
    p_eval_aggregate.add_argument("--responses", required=True, help="responses file")
    p_eval_aggregate.add_argument("--items", required=True, help="assignments file")
    p_eval_aggregate.add_argument("--out", default=None,
                                  help="also write the report record here")
    p_eval_aggregate.add_argument("--ci-method", choices=("normal", "wilson"),
                                  default="normal",
                                  help="interval method (default: %(default)s)")

    p_report = sub.add_parser("report", help="render a score records file as text")
    p_report.add_argument("--scores", required=True, help="score records file")
    p_report.add_argument("--external-scores", default=None,
                          help="side-file of externally computed metric records")

    p_validate = sub.add_parser("validate", help="check a corpus file")
    p_validate.add_argument("--in", dest="in_path", required=True, help="corpus file")
    p_validate.add_argument("--expected-split", default=None,
                            choices=("train", "validation", "test"),
                            help="require every record to carry this split")

    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Expand ``--config FILE`` into default flags for the subcommand.

    The file holds a JSON object keyed by flag name (without dashes);
    explicit command-line flags always win. Boolean true appends the bare
    flag, boolean false is only meaningful for flags with a --no- form.
    """
    if "--config" not in argv:
        return argv
    index = argv.index("--config")
    if index + 1 >= len(argv):
        raise UsageError("--config requires a file path")
    path = argv[index + 1]
    rest = argv[:index] + argv[index + 2:]
    if not rest:
        raise UsageError("--config requires a subcommand")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            values = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}")
    if not isinstance(values, dict):
        raise UsageError("config file must hold a JSON object of flag values")
    extra: list[str] = []
    for key, value in values.items():
        flag = "--" + str(key).lstrip("-").replace("_", "-")
        if flag in rest:
            continue  # explicit flag wins
        if isinstance(value, bool):
            if value:
                extra.append(flag)
            elif flag == "--accepted-only":
                extra.append("--no-accepted-only")
        else:
            extra.extend([flag, str(value)])
    return rest[:1] + extra + rest[1:]


def _write_runconfig(out_path: str, args: argparse.Namespace) -> None:
    resolved = {key: value for key, value in sorted(vars(args).items())
                if key != "subcommand"}
    resolved["subcommand"] = args.subcommand
    with open(f"{out_path}.runconfig.json", "w", encoding="utf-8") as handle:
        json.dump(resolved, handle, ensure_ascii=False, indent=2, sort_keys=True)
        handle.write("\n")


def _build_client(args: argparse.Namespace) -> LLMClient:
    mock = MockResponder.from_file(args.mock) if args.mock is not None else None
    if mock is None and args.endpoint is None:
        raise ProviderError("no provider configured: pass --endpoint or --mock")
    return LLMClient(endpoint=args.endpoint, api_key_env=args.api_key_env,
                     cache_dir=args.cache_dir, mock=mock,
                     max_retries=args.retry_cap, rpm=args.rpm,
                     concurrency=args.concurrency, system_role=args.system_role)


def _cmd_augment(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.in_path)
    variant = VARIANT_CHOICES[args.variant]
    params = SamplingParams(model_id=args.model, temperature=args.temperature,
                            top_p=args.top_p, max_tokens=args.max_tokens)
    client = _build_client(args)
    stopwords = concepts_mod.load_stopwords(args.stopwords)

    concepts_by_id = None
    if variant is PromptVariant.PARAPHRASE_CONCEPT:
        if args.concepts and os.path.exists(args.concepts):
            concepts_by_id = concepts_mod.load_concept_cache(args.concepts)
        else:
            concepts_by_id = {
                utt.id: concepts_mod.extract_concepts(
                    utt.gt_summary, args.max_concepts,
                    utterance_id=utt.id, stopwords=stopwords)
                for utt in corpus}
            if args.concepts:
                concepts_mod.save_concept_cache(
                    [concepts_by_id[utt.id] for utt in corpus], args.concepts)

    summaries = sampler_mod.augment_corpus(
        corpus, variant, args.n_per_utt, params, args.seed, client,
        concepts_by_id=concepts_by_id, max_attempts=args.max_attempts,
        tolerance=args.word_tolerance, leniency=args.leniency)
    sampler_mod.save_summaries(summaries, args.out)
    _write_runconfig(args.out, args)
    accepted = sum(1 for s in summaries if s.verdict.accepted)
    print(f"wrote {len(summaries)} summaries ({accepted} accepted) to {args.out}")
    return EXIT_OK


def _cmd_score(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.in_path)
    by_id = corpus.by_id()
    summaries = sampler_mod.load_summaries(args.aug)
    if not summaries:
        raise CorpusError(f"no summaries in {args.aug}")
    stopwords = concepts_mod.load_stopwords(args.stopwords)

    pairs, coverage_values, lengths = [], [], []
    for summary in summaries:
        utt = by_id.get(summary.utterance_id)
        if utt is None:
            raise CorpusError(f"summary references unknown utterance "
                              f"{summary.utterance_id!r}")
        pairs.append((summary.text, utt.gt_summary))
        lengths.append(len(summary.text.split()))
        if summary.variant is PromptVariant.PARAPHRASE_CONCEPT and args.leniency != "off":
            concept_set = concepts_mod.extract_concepts(
                utt.gt_summary, args.max_concepts, utterance_id=utt.id,
                stopwords=stopwords)
            if concept_set.words:
                coverage_values.append(metrics_mod.concept_coverage(
                    summary.text, concept_set, args.leniency))

    external = (metrics_mod.load_external_scores(args.external_scores)
                if args.external_scores else None)
    report = metrics_mod.build_score_report(pairs, coverage_values or None,
                                            external, lengths)
    report.write_records(f"{args.out}.jsonl")
    text = report.render_text(title=f"scores: {os.path.basename(args.aug)} "
                                    f"vs {os.path.basename(args.in_path)}")
    with open(f"{args.out}.txt", "w", encoding="utf-8") as handle:
        handle.write(text)
    _write_runconfig(args.out, args)
    print(text, end="")
    return EXIT_OK


def _cmd_assemble(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.in_path)
    summaries = sampler_mod.load_summaries(args.aug)
    strategy = manifests_mod.Strategy(args.strategy)
    manifests = manifests_mod.assemble(strategy, corpus, summaries, args.seed,
                                       accepted_only=args.accepted_only,
                                       exact_half=args.exact_half)
    paths = [manifests_mod.save_manifest(manifest, args.out)
             for manifest in manifests]
    if args.augmented_testset:
        testset = manifests_mod.build_augmented_testset(corpus, summaries)
        testset_path = os.path.join(args.out, "augmented-test.corpus")
        save_corpus(testset, testset_path)
        paths.append(testset_path)
    _write_runconfig(os.path.join(args.out, strategy.value), args)
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_eval_assign(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.in_path)
    summaries = sampler_mod.load_summaries(args.aug)
    index = manifests_mod._aug_index(summaries, accepted_only=True)
    items = [(utt.id, utt.gt_summary, index[utt.id][0].text)
             for utt in corpus if index.get(utt.id)]
    skipped = len(corpus) - len(items)
    assignments = humaneval_mod.create_assignments(items, args.annotators,
                                                   args.per_annotator, args.seed)
    humaneval_mod.save_assignments(assignments, args.out)
    _write_runconfig(args.out, args)
    planned = args.annotators * args.per_annotator
    note = f" ({skipped} utterances without accepted summaries skipped)" if skipped else ""
    print(f"wrote {planned} planned responses for {args.annotators} annotators "
          f"to {args.out}{note}")
    return EXIT_OK


def _cmd_eval_serve(args: argparse.Namespace) -> int:
    assignments = humaneval_mod.load_assignments(args.assignments)
    store = humaneval_mod.ResponseStore(args.responses, assignments)
    if not os.path.exists(args.responses):
        open(args.responses, "a", encoding="utf-8").close()
    service = EvalService(assignments, store, admin_token_env=args.admin_token_env)
    serve_forever(service, port=args.port, static_dir=args.static)
    return EXIT_OK


def _cmd_eval_aggregate(args: argparse.Namespace) -> int:
    report = humaneval_mod.aggregate_from_files(args.responses, args.items,
                                                ci_method=args.ci_method)
    print(report.render_text(), end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(report.to_record(), handle, ensure_ascii=False, indent=2)
            handle.write("\n")
        _write_runconfig(args.out, args)
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    report = metrics_mod.ScoreReport()
    with open(args.scores, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                row = json.loads(line)
                report.add(row["metric"], row["value"])
    if args.external_scores:
        report.extend_external(metrics_mod.load_external_scores(args.external_scores))
    print(report.render_text(title=f"report: {os.path.basename(args.scores)}"), end="")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.in_path, expected_split=args.expected_split)
    splits = {}
    for utt in corpus:
        splits[utt.split] = splits.get(utt.split, 0) + 1
    detail = ", ".join(f"{split}={count}" for split, count in sorted(splits.items()))
    print(f"ok: {len(corpus)} records ({detail})")
    return EXIT_OK


_COMMANDS = {"augment": _cmd_augment, "score": _cmd_score, "assemble": _cmd_assemble,
             "eval-assign": _cmd_eval_assign, "eval-serve": _cmd_eval_serve,
             "eval-aggregate": _cmd_eval_aggregate, "report": _cmd_report,
             "validate": _cmd_validate}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_apply_config_file(
            list(sys.argv[1:] if argv is None else argv)))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.subcommand](args)
    except (CorpusError, manifests_mod.AssemblyError, humaneval_mod.EvalError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ProviderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
