"""Operator command line: simulate, analyze, serve, ingest, eval, report.

Exit codes: 0 success, 1 usage error, 2 data/environment error. Diagnostics
go to stderr; results go to files or stdout. For fixed inputs and seeds all
emitted JSON/CSV artifacts are byte-identical across runs (timestamps live
only in designated created_at/timestamp fields).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .device_sim import generate_cohort
from .errors import DuplicateId, TelecareError
from .store import SessionStore, canonical_json
from .temperament_eval import (
    cross_validate,
    read_cohort_csv,
    write_cohort_csv,
)

USAGE_ERROR = 1
DATA_ERROR = 2

EVAL_FEATURE_REGION = "wrist_malmas"
# assembled cohort CSV layout: f1..f13 = warm/cold family, f14..f25 = dry/wet
WARM_FAMILY_DIM = 13
WET_FAMILY_DIM = 12


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def build_parser() -> _Parser:
    parser = _Parser(prog="pmtelecare", description=__doc__)
    parser.add_argument("--config", default=None, help="JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[], help="generate a synthetic cohort")
    p.add_argument("--n", type=int, default=34)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None, help="store directory (default: config data_dir)")
    p.add_argument("--warm-mix", default=None, help="counts 'warm,moderate,cold'")

    p = sub.add_parser("analyze", help="analyze one stored session directory")
    p.add_argument("session", help="path to a session directory")
    p.add_argument("--out", default=None, help="artifact directory (default: the session dir)")
    p.add_argument("--svg", action="store_true", help="also render SVG charts")

    p = sub.add_parser("serve", help="run the telecare HTTP service")
    p.add_argument("--addr", default=None, help="host:port (default: config listen_addr)")
    p.add_argument("--data-dir", default=None, help="store root (default: config data_dir)")

    p = sub.add_parser("ingest", help="upload a session directory to a server")
    p.add_argument("session", help="path to a session directory")
    p.add_argument("--server", default=None, help="base URL (default: config server_url)")

    p = sub.add_parser("eval", help="cross-validate temperament classification")
    p.add_argument("--dataset", required=True, help="cohort CSV or a store directory")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--axis", choices=["warm", "wet", "both"], default="both")
    p.add_argument("--out", default=None, help="write the eval report JSON here")
    p.add_argument("--export-dataset", default=None, help="also write the assembled cohort CSV")

    p = sub.add_parser("report", help="print a summary of one stored session")
    p.add_argument("session", help="path to a session directory")
    return parser


def load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _require(value, config, key, flag) -> str:
    """Flag value, else config fallback, else a usage error."""
    value = value or config.get(key)
    if not value:
        print(f"error: {flag} required (or set {key!r} in --config)", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    return value


def load_mmq_schema(config):
    """Schema referenced by the config, or the built-in default."""
    from .temperament_eval import MmqItem, MmqSchema, default_mmq_schema

    path = config.get("mmq_schema")
    if not path:
        return default_mmq_schema()
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    items = tuple(
        MmqItem(it["id"], it["axis"], float(it.get("weight", 1.0))) for it in raw["items"]
    )
    thresholds = {
        axis: tuple(raw.get("thresholds", {}).get(axis, (0.33, 0.66)))
        for axis in ("warm", "wet")
    }
    return MmqSchema(items, thresholds, raw.get("version", "v1"))


# --- artifact emitters -------------------------------------------------------


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def phase_power_csv(payload: dict) -> str:
    lines = ["channel,phase1,phase2,phase3"]
    for ci, row in enumerate(payload["phase_power"]):
        lines.append(f"c{ci + 1}," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def power_timeline_csv(payload: dict) -> str:
    timeline = payload["power_timeline"]
    header = ["t_s"] + [f"c{i + 1}" for i in range(len(timeline))]
    lines = [",".join(header)]
    if timeline and timeline[0]:
        for wi in range(len(timeline[0])):
            t = timeline[0][wi]["t_s"]
            row = [repr(float(t))] + [repr(float(ch[wi]["strength"])) for ch in timeline]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def spatial_map_csv(payload: dict) -> str:
    smap = payload["spatial_map"]
    lines = ["sensor,x_mm,y_mm,strength"]
    for i, ((x, y), s) in enumerate(zip(smap["sensor_xy_mm"], smap["strength"])):
        lines.append(f"c{i + 1},{x!r},{y!r},{float(s)!r}")
    lines.append(f"# length_mm={smap['length_mm']!r} width_mm={smap['width_mm']!r}")
    return "\n".join(lines) + "\n"


def pressure_bins_csv(edges, power) -> str:
    headers = [f"{edges[i]!r}-{edges[i + 1]!r}mmHg" for i in range(len(edges) - 1)]
    lines = ["channel," + ",".join(headers)]
    for ci, row in enumerate(power):
        lines.append(f"c{ci + 1}," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _svg_bar_chart(title: str, labels, series: dict, width=640, height=360) -> str:
    """Tiny deterministic grouped-bar SVG (one group per label)."""
    margin = 50
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    all_vals = [v for vals in series.values() for v in vals]
    top = max(all_vals + [1e-12])
    groups = len(labels)
    nseries = len(series)
    group_w = plot_w / max(groups, 1)
    bar_w = group_w / (nseries + 1)
    palette = ["#4878a8", "#e08a3c", "#6aa56a", "#b05f5f"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for gi, label in enumerate(labels):
        for si, (name, vals) in enumerate(series.items()):
            v = vals[gi]
            h = 0.0 if top == 0 else plot_h * float(v) / top
            x = margin + gi * group_w + (si + 0.5) * bar_w
            y = height - margin - h
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" height="{h:.2f}" '
                f'fill="{palette[si % len(palette)]}"><title>{name}={float(v):.6g}</title></rect>'
            )
        parts.append(
            f'<text x="{margin + (gi + 0.5) * group_w:.2f}" y="{height - margin + 16}" '
            f'text-anchor="middle" font-size="11">{label}</text>'
        )
    lx = width - margin - 120
    for si, name in enumerate(series):
        parts.append(
            f'<rect x="{lx}" y="{margin + 16 * si}" width="10" height="10" '
            f'fill="{palette[si % len(palette)]}"/>'
            f'<text x="{lx + 14}" y="{margin + 16 * si + 9}" font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_analysis_artifacts(payload: dict, out_dir: str, svg: bool = False) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name, text):
        path = os.path.join(out_dir, name)
        _write_text(path, text)
        written.append(path)

    emit("report.json", canonical_json(payload) + "\n")
    emit("phase_power.csv", phase_power_csv(payload))
    emit("power_timeline.csv", power_timeline_csv(payload))
    emit("spatial_map.csv", spatial_map_csv(payload))
    if svg:
        channels = [f"c{i + 1}" for i in range(len(payload["phase_power"]))]
        phase_series = {
            "no pressure": [row[0] for row in payload["phase_power"]],
            "inflation": [row[1] for row in payload["phase_power"]],
            "deflation": [row[2] for row in payload["phase_power"]],
        }
        emit(
            "phase_power.svg",
            _svg_bar_chart("Channel power per pressure phase", channels, phase_series),
        )
        emit(
            "spatial_map.svg",
            _svg_bar_chart(
                "Pulse strength by sensor",
                channels,
                {"strength": payload["spatial_map"]["strength"]},
            ),
        )
    return written


# --- dataset assembly --------------------------------------------------------


def assemble_dataset_from_store(store: SessionStore):
    """Feature matrix for eval: wrist warm/cold + dry/wet vectors per session,
    labelled by the questionnaire-derived temperament."""
    ids = sorted(store.session_ids())
    feats, warm, wet = [], [], []
    for sid in ids:
        payload = store.analyze_session(sid)
        thermal = payload["thermal"].get(EVAL_FEATURE_REGION)
        if thermal is None:
            raise TelecareError(f"session {sid} lacks {EVAL_FEATURE_REGION} thermal data")
        feats.append(thermal["warm_cold"]["values"] + thermal["dry_wet"]["values"])
        label = payload["mmq_label"]
        warm.append(label["warm_axis"])
        wet.append(label["wet_axis"])
    return ids, warm, wet, np.asarray(feats, dtype=np.float64)


# --- subcommand implementations -----------------------------------------------


def cmd_simulate(args, config) -> int:
    out = _require(args.out, config, "data_dir", "--out")
    warm_mix = None
    if args.warm_mix:
        counts = [int(v) for v in args.warm_mix.split(",")]
        if len(counts) != 3:
            print("--warm-mix needs three comma-separated counts", file=sys.stderr)
            return USAGE_ERROR
        warm_mix = {"warm": counts[0], "moderate": counts[1], "cold": counts[2]}
    store = SessionStore(out, sensor_layout=config.get("sensor_layout"))
    cohort = generate_cohort(
        n=args.n, warm_mix=warm_mix, seed=args.seed, schema=load_mmq_schema(config)
    )
    for record in cohort:
        store.save_session(record)
    print(f"wrote {len(cohort)} sessions to {out}")
    return 0


def _open_session_dir(path, config):
    path = path.rstrip("/")
    root, sid = os.path.split(os.path.abspath(path))
    store = SessionStore(root, sensor_layout=config.get("sensor_layout"))
    return store, sid


def cmd_analyze(args, config) -> int:
    from .pulse_analysis import channel_pressure_bin_power

    store, sid = _open_session_dir(args.session, config)
    payload = store.analyze_session(sid)
    out_dir = args.out or os.path.abspath(args.session)
    written = emit_analysis_artifacts(payload, out_dir, svg=args.svg)

    # per-pressure-bin channel power inside each pressurized phase
    record = store.load_session(sid)
    seg = payload["phase_segmentation"]
    for name, phase in (("inflation", seg["phase2"]), ("deflation", seg["phase3"])):
        edges, power = channel_pressure_bin_power(record.recording, within=tuple(phase))
        path = os.path.join(out_dir, f"pressure_bins_{name}.csv")
        _write_text(path, pressure_bins_csv(edges, power))
        written.append(path)
        if args.svg:
            channels = [f"c{i + 1}" for i in range(len(power))]
            series = {
                f"{edges[bi]:g}-{edges[bi + 1]:g}": [row[bi] for row in power]
                for bi in range(len(edges) - 1)
                if any(row[bi] > 0 for row in power)
            }
            svg_path = os.path.join(out_dir, f"pressure_bins_{name}.svg")
            _write_text(
                svg_path,
                _svg_bar_chart(f"Channel power during {name} by cuff pressure (mmHg)", channels, series),
            )
            written.append(svg_path)

    for path in written:
        print(path)
    return 0


def cmd_serve(args, config) -> int:
    from .service import run_server

    data_dir = _require(args.data_dir, config, "data_dir", "--data-dir")
    addr = args.addr or config.get("listen_addr") or "127.0.0.1:8763"
    host, _, port = addr.partition(":")
    run_server(data_dir, host=host or "127.0.0.1", port=int(port or 8763))
    return 0


def cmd_ingest(args, config) -> int:
    import httpx

    server = _require(args.server, config, "server_url", "--server")
    store, sid = _open_session_dir(args.session, config)
    record = store.load_session(sid)
    from .session import session_to_json_dict

    headers = {}
    token = os.environ.get("TELECARE_TOKEN")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    url = server.rstrip("/") + "/api/v1/sessions"
    resp = httpx.post(url, json=session_to_json_dict(record), headers=headers, timeout=120.0)
    if resp.status_code == 201:
        print(f"ingested {sid}")
        return 0
    if resp.status_code == 409:
        print(f"{sid} already present on server")
        return 0
    print(f"server rejected {sid}: {resp.status_code} {resp.text}", file=sys.stderr)
    return DATA_ERROR


def axis_feature_columns(num_features: int, axis: str) -> slice:
    """Axis-matched feature family in the canonical 25-column layout; any
    other width evaluates on all columns."""
    if num_features != WARM_FAMILY_DIM + WET_FAMILY_DIM:
        return slice(None)
    if axis == "warm":
        return slice(0, WARM_FAMILY_DIM)
    return slice(WARM_FAMILY_DIM, WARM_FAMILY_DIM + WET_FAMILY_DIM)


def cmd_eval(args, config) -> int:
    if os.path.isdir(args.dataset):
        store = SessionStore(args.dataset, sensor_layout=config.get("sensor_layout"))
        ids, warm, wet, feats = assemble_dataset_from_store(store)
        if args.export_dataset:
            write_cohort_csv(args.export_dataset, ids, warm, wet, feats)
    else:
        ids, warm, wet, feats = read_cohort_csv(args.dataset)
    axes = {"warm": warm, "wet": wet}
    wanted = ["warm", "wet"] if args.axis == "both" else [args.axis]
    reports = {}
    for axis in wanted:
        cols = axis_feature_columns(feats.shape[1], axis)
        report = cross_validate(feats[:, cols], axes[axis], k=args.k, seed=args.seed)
        d = report.as_dict()
        d["feature_columns"] = [cols.start or 0, cols.stop if cols.stop is not None else feats.shape[1]]
        reports[axis] = d
    out = json.dumps(reports, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write_text(args.out, out)
        print(args.out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_report(args, config) -> int:
    store, sid = _open_session_dir(args.session, config)
    record = store.load_session(sid)
    payload = store.analyze_session(sid)
    lines = [
        f"session          {record.id}",
        f"participant      {record.participant.pseudo_id} "
        f"({record.participant.sex}, {record.participant.age_years} y)",
        f"questionnaire    {record.mmq.label.summary()}",
        f"heart rate       {payload['heart_rate_bpm']:.1f} BPM",
        f"pulse length     {payload['spatial_map']['length_mm']:.1f} mm",
        f"pulse width      {payload['spatial_map']['width_mm']:.1f} mm",
        "channel  strength      lag_ms   p1-power     p2-power     p3-power",
    ]
    for ci in range(len(payload["channel_strength"])):
        pp = payload["phase_power"][ci]
        lines.append(
            f"c{ci + 1:<6} {payload['channel_strength'][ci]:<12.4g} "
            f"{payload['lag_s'][ci] * 1000:<8.1f} "
            f"{pp[0]:<12.4g} {pp[1]:<12.4g} {pp[2]:<12.4g}"
        )
    if record.annotations:
        lines.append("annotations:")
        for a in record.annotations:
            label = a.temperament.summary() if a.temperament else "-"
            lines.append(f"  [{a.author}] {label} {a.note}")
    print("\n".join(lines))
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "serve": cmd_serve,
    "ingest": cmd_ingest,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except SystemExit as exc:
        return int(exc.code or 0)
    except TelecareError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
