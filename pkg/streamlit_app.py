# streamlit_app.py
import os, time, json, traceback
from pathlib import Path
import numpy as np
import streamlit as st

from ymlab.io import read_trace_csv, read_checkpoint, read_path, parse_report_json, report_to_dict
from ymlab.lattice import curvature


# ---------- Tab indices ----------
TAB_TRACE    = 0
TAB_SPECTRUM = 1
TAB_ASYMPT   = 2
TAB_GAUGE    = 3
TAB_CONE     = 4
TAB_CONFIG   = 5

REPORTS = {
    TAB_SPECTRUM: ["spectrum.json"],
    TAB_ASYMPT: ["rate.json", "lojasiewicz.json", "regimes.json", "integral_bound.json"],
    TAB_GAUGE: ["certificate.json", "partial.json"],
    TAB_CONE: ["density.json", "cylinder.json"],
}


# ---------- Helpers ----------
def timeit(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, (time.perf_counter() - t0) * 1000.0  # ms


perf = {}  # collected load timings

def perf_badge(*pairs):
    if not pairs:
        return
    cols = st.columns(len(pairs))
    for c, (label, ms) in zip(cols, pairs):
        with c:
            st.metric(label, f"{ms:.1f} ms")


def load_report(path: Path):
    """Parsed report dataclass, or the raw dict for files without a report kind (partial.json)."""
    text = path.read_text(encoding="utf-8")
    try:
        return report_to_dict(parse_report_json(text))
    except ValueError:
        return json.loads(text)


def show_reports(run_dir: Path, names):
    found = False
    for name in names:
        p = run_dir / name
        if not p.exists():
            continue
        found = True
        st.markdown(f"**{name}**")
        try:
            data, ms = timeit(lambda: load_report(p))
            perf[name] = ms
            st.json(data)
        except Exception as e:
            st.error(f"{name}: {e}")
            st.code(traceback.format_exc())
    if not found:
        st.info(f"No {', '.join(names)} in {run_dir}.")


# ---------- Page ----------
st.set_page_config(page_title="ymlab viewer", layout="wide")
st.title("ymlab viewer")
st.caption("trace.csv → flow plots  •  JSON reports  •  checkpoints  (read-only view of an output directory)")

# ---------- Sidebar ----------
with st.sidebar:
    st.header("Run")
    base = Path(st.text_input("Output directory", value=os.environ.get("YMLAB_OUTPUT_DIR", "ymlab-out")))
    seeds = sorted(p.name for p in base.glob("seed-*") if p.is_dir()) if base.is_dir() else []
    run_dir = base / st.selectbox("Seed", seeds) if seeds else base
    log_scale = st.checkbox("Log scale", value=True)

if not run_dir.is_dir():
    st.error(f"{run_dir} is not a directory; run `ymlab <command> --set output.dir={run_dir}` first.")
    st.stop()

tabs = st.tabs(["Trace", "Spectrum", "Asymptotics", "Gauge", "Cone", "Config"])

# ---------- TRACE ----------
with tabs[TAB_TRACE]:
    st.subheader("Gradient flow")
    trace_path = run_dir / "trace.csv"
    if trace_path.exists():
        try:
            trace, ms = timeit(lambda: read_trace_csv(trace_path))
            perf["trace_ms"] = ms
            cols = {"energy": trace.energy, "grad_norm": trace.grad_norm, "dist_ref": trace.dist_ref}
            if log_scale:
                cols = {k: np.log10(np.maximum(v, 1e-300)) for k, v in cols.items()}
                st.caption("log10 of each column")
            c1, c2 = st.columns(2)
            with c1:
                st.markdown("**Energy**")
                st.line_chart({"t": trace.times, "energy": cols["energy"]}, x="t")
            with c2:
                st.markdown("**Gradient norm / distance**")
                st.line_chart({"t": trace.times, "grad_norm": cols["grad_norm"], "dist_ref": cols["dist_ref"]},
                              x="t")
            st.metric("Steps", len(trace) - 1)
        except Exception as e:
            st.error(f"Trace error: {e}")
            st.code(traceback.format_exc())
    else:
        st.info("No trace.csv here.")
    show_reports(run_dir, ["outcome.json"])

    final = run_dir / "final.ymlf"
    if final.exists():
        with st.expander("Final link field"):
            try:
                U, ms = timeit(lambda: read_checkpoint(final))
                perf["checkpoint_ms"] = ms
                F = curvature(U)
                st.write({"lattice": str(U.lattice), "group": U.group.name,
                          "sup |F|": float(F.sup_norm()), "|F|": float(F.norm())})
            except Exception as e:
                st.error(f"Checkpoint error: {e}")
    perf_badge(("Trace", perf.get("trace_ms", 0.0)), ("Checkpoint", perf.get("checkpoint_ms", 0.0)))

# ---------- SPECTRUM ----------
with tabs[TAB_SPECTRUM]:
    st.subheader("Jacobi spectrum on the Coulomb slice")
    show_reports(run_dir, REPORTS[TAB_SPECTRUM])
    p = run_dir / "spectrum.json"
    if p.exists():
        st.bar_chart({"eigenvalue": json.loads(p.read_text())["eigenvalues"]})

# ---------- ASYMPTOTICS ----------
with tabs[TAB_ASYMPT]:
    st.subheader("Rates, Lojasiewicz exponent, regimes")
    show_reports(run_dir, REPORTS[TAB_ASYMPT])

# ---------- GAUGE ----------
with tabs[TAB_GAUGE]:
    st.subheader("Standard form")
    show_reports(run_dir, REPORTS[TAB_GAUGE])
    sp = run_dir / "standard-path.ymlp"
    if sp.exists():
        try:
            path, ms = timeit(lambda: read_path(sp))
            perf["path_ms"] = ms
            st.write({"frames": len(path), "dt": path.dt, "t_end": float(path.times[-1])})
            st.line_chart({"t": path.times, "|beta|": [b.norm() for b in path.beta]}, x="t")
        except Exception as e:
            st.error(f"Path error: {e}")
            st.code(traceback.format_exc())
    perf_badge(("Path", perf.get("path_ms", 0.0)))

# ---------- CONE ----------
with tabs[TAB_CONE]:
    st.subheader("Density ratios and cylinder checks")
    show_reports(run_dir, REPORTS[TAB_CONE])
    p = run_dir / "density.json"
    if p.exists():
        d = json.loads(p.read_text())
        st.line_chart({"rho": d["radii"], "ratio": d["ratios"]}, x="rho")

# ---------- CONFIG ----------
with tabs[TAB_CONFIG]:
    st.subheader("Configuration")
    cfg = base / "config.txt" if not (run_dir / "config.txt").exists() else run_dir / "config.txt"
    if cfg.exists():
        st.code(cfg.read_text(), language="ini")
    else:
        st.info("No config.txt recorded.")
