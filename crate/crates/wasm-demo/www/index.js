import init, { objectiveCurve, weightField, divergenceCurve } from "./pkg/dwmsa_wasm.js";

const $ = (id) => document.getElementById(id);
const PAD = { left: 56, right: 16, top: 14, bottom: 34 };

function setStatus(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "status error" : "status";
}

// Axes with linear or log x; returns mapping functions.
function axes(ctx, xr, yr, { logX = false, xLabel = "", yLabel = "" } = {}) {
  const { width: W, height: H } = ctx.canvas;
  ctx.clearRect(0, 0, W, H);
  const fx = logX ? Math.log : (v) => v;
  const [x0, x1] = [fx(xr[0]), fx(xr[1])];
  const sx = (v) => PAD.left + ((fx(v) - x0) / (x1 - x0)) * (W - PAD.left - PAD.right);
  const sy = (v) => H - PAD.bottom - ((v - yr[0]) / (yr[1] - yr[0])) * (H - PAD.top - PAD.bottom);
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.beginPath();
  ctx.moveTo(PAD.left, PAD.top);
  ctx.lineTo(PAD.left, H - PAD.bottom);
  ctx.lineTo(W - PAD.right, H - PAD.bottom);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const yv = yr[0] + ((yr[1] - yr[0]) * i) / 4;
    ctx.fillText(yv.toPrecision(3), 4, sy(yv) + 4);
    const xv = logX ? Math.exp(x0 + ((x1 - x0) * i) / 4) : xr[0] + ((xr[1] - xr[0]) * i) / 4;
    ctx.fillText(xv.toPrecision(3), sx(xv) - 10, H - PAD.bottom + 14);
  }
  ctx.fillText(xLabel, W / 2, H - 4);
  ctx.save();
  ctx.translate(12, H / 2 + 30);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();
  return { sx, sy };
}

function polyline(ctx, xs, ys, map, color, width = 1.5) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  xs.forEach((x, i) => {
    const [px, py] = [map.sx(x), map.sy(ys[i])];
    i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.lineWidth = 1;
}

function runObjective() {
  const n = +$("obj-n").value;
  const seed = +$("obj-seed").value;
  const z0 = +$("obj-z0").value;
  const iters = +$("obj-iters").value;
  setStatus("obj-status", "solving…");
  // Let the status paint before the synchronous solve.
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const c = JSON.parse(objectiveCurve(n, seed, z0, iters));
      const ctx = $("obj-canvas").getContext("2d");
      const top = Math.max(...c.gamma, ...c.trace_gamma) * 1.05 || 1;
      const map = axes(ctx, [0, 1], [0, top], { xLabel: "z₁", yLabel: "objective" });
      polyline(ctx, c.z1, c.gamma, map, "#1f77b4");
      ctx.fillStyle = "#d62728";
      c.trace_z1.forEach((z, i) => {
        ctx.beginPath();
        ctx.arc(map.sx(z), map.sy(c.trace_gamma[i]), 2.5, 0, 2 * Math.PI);
        ctx.fill();
      });
      const last = c.trace_gamma.length - 1;
      setStatus(
        "obj-status",
        `${last} iterations, final objective ${c.trace_gamma[last].toExponential(3)} at z₁ = ` +
          `${c.trace_z1[last].toFixed(4)}${c.converged ? " (below 0.01)" : ""}; M = ${c.m_bound.toFixed(1)}; ` +
          `${(performance.now() - t0).toFixed(0)} ms`
      );
    } catch (e) {
      setStatus("obj-status", String(e), true);
    }
  }, 10);
}

// Blue-white-red for weights in [0,1]; viridis-like ramp otherwise.
function color(v, kind) {
  if (kind === "weight") {
    const r = Math.round(255 * Math.min(1, 2 * v));
    const b = Math.round(255 * Math.min(1, 2 * (1 - v)));
    const g = Math.round(255 * (1 - Math.abs(2 * v - 1)));
    return [r, g, b];
  }
  const t = Math.max(0, Math.min(1, v));
  return [Math.round(68 + 185 * t), Math.round(1 + 230 * t), Math.round(84 + 60 * (1 - t))];
}

function runField() {
  const z = +$("field-z").value;
  const kind = $("field-kind").value;
  const res = 120;
  try {
    const f = JSON.parse(weightField(+$("obj-n").value, +$("obj-seed").value, z, res));
    const values = f[kind];
    const lo = kind === "weight" ? 0 : Math.min(...values);
    const hi = kind === "weight" ? 1 : Math.max(...values);
    const canvas = $("field-canvas");
    const ctx = canvas.getContext("2d");
    const img = ctx.createImageData(res, res);
    values.forEach((v, i) => {
      const [r, g, b] = color((v - lo) / (hi - lo || 1), kind);
      img.data.set([r, g, b, 255], 4 * i);
    });
    const off = new OffscreenCanvas(res, res);
    off.getContext("2d").putImageData(img, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
    if ($("field-support").checked) {
      ctx.fillStyle = "rgba(0,0,0,0.45)";
      const scale = canvas.width / (2 * f.extent);
      for (const [x, y] of f.support) {
        ctx.fillRect((x + f.extent) * scale - 1, (f.extent - y) * scale - 1, 2, 2);
      }
    }
    setStatus(
      "field-status",
      `plane [−${f.extent}, ${f.extent}]², colour range ${lo.toPrecision(3)} … ${hi.toPrecision(3)}`
    );
  } catch (e) {
    setStatus("field-status", String(e), true);
  }
}

function runDivergence() {
  try {
    const c = JSON.parse(divergenceCurve($("div-p").value, $("div-q").value, +$("div-max").value));
    const ctx = $("div-canvas").getContext("2d");
    // Infinite values arrive as null.
    const finite = c.d_alpha.filter(Number.isFinite);
    if (finite.length === 0) throw new Error("d_α is infinite for every order: P has mass where Q has none");
    const yTop = Math.max(Number.isFinite(c.d_inf) ? c.d_inf : 0, ...finite) * 1.05;
    const map = axes(ctx, [c.alpha[0], c.alpha[c.alpha.length - 1]], [Math.min(1, c.d_one), yTop || 2], {
      logX: true,
      xLabel: "α (log scale)",
      yLabel: "d_α",
    });
    const keep = c.alpha.map((_, i) => Number.isFinite(c.d_alpha[i]));
    polyline(ctx, c.alpha.filter((_, i) => keep[i]), finite, map, "#2ca02c", 2);
    for (const [v, col] of [[c.d_inf, "#d62728"], [c.d_one, "#9467bd"]]) {
      if (!Number.isFinite(v)) continue;
      ctx.setLineDash([5, 4]);
      polyline(ctx, [c.alpha[0], c.alpha[c.alpha.length - 1]], [v, v], map, col, 1);
      ctx.setLineDash([]);
    }
    const fmt = (v) => (Number.isFinite(v) ? v.toPrecision(6) : "∞");
    setStatus("div-status", `exp(KL) = ${fmt(c.d_one)} (purple), sup ratio = ${fmt(c.d_inf)} (red)`);
  } catch (e) {
    setStatus("div-status", String(e), true);
  }
}

await init();
$("obj-z0").addEventListener("input", (e) => ($("obj-z0-val").textContent = (+e.target.value).toFixed(2)));
$("obj-run").addEventListener("click", runObjective);
$("field-z").addEventListener("input", (e) => {
  $("field-z-val").textContent = (+e.target.value).toFixed(2);
  runField();
});
$("field-kind").addEventListener("change", runField);
$("field-support").addEventListener("change", runField);
for (const id of ["div-p", "div-q", "div-max"]) $(id).addEventListener("input", runDivergence);
runObjective();
runField();
runDivergence();
