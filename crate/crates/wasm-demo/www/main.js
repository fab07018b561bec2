import init, { Grid } from "./pkg/stealthrmt_wasm.js";

const BETAS = [];
for (let e = 0; e <= 3.0001; e += 0.05) BETAS.push(Math.pow(10, e));
const MC_BETAS = [2, 5, 10, 30, 100];

const $ = (id) => document.getElementById(id);
let grid = null;
let mcPoints = [];

function status(msg, isError = false) {
  const el = $("status");
  el.textContent = msg;
  el.className = isError ? "err" : "";
}

function axes(ctx, w, h, pad, yMin, yMax, ylabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  ctx.strokeRect(pad, 10, w - pad - 10, h - pad - 10);
  for (let e = 0; e <= 3; e++) {
    const x = sx(Math.pow(10, e), w, pad);
    ctx.fillText("1e" + e, x - 8, h - pad + 16);
  }
  for (let i = 0; i <= 4; i++) {
    const v = yMin + (i / 4) * (yMax - yMin);
    ctx.fillText(v.toPrecision(3), 4, sy(v, h, pad, yMin, yMax) + 4);
  }
  ctx.fillText("beta", w / 2, h - 6);
  ctx.fillText(ylabel, pad + 6, 24);
}

const sx = (b, w, pad) => pad + (Math.log10(b) / 3) * (w - pad - 10);
const sy = (v, h, pad, lo, hi) => 10 + (1 - (v - lo) / (hi - lo)) * (h - pad - 20);

function line(ctx, xs, ys, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(x, ys[i]) : ctx.moveTo(x, ys[i])));
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawErgodic() {
  const c = $("ergodic");
  const ctx = c.getContext("2d");
  const [w, h, pad] = [c.width, c.height, 60];
  const curve = grid.ergodicCurve(new Float64Array(BETAS));
  const perfect = grid.perfectCost();
  const lo = perfect * 0.98;
  const hi = Math.max(...curve, ...mcPoints.map((p) => p.mean + p.se)) * 1.02;
  axes(ctx, w, h, pad, lo, hi, "cost per state (nats)");
  const xs = BETAS.map((b) => sx(b, w, pad));
  line(ctx, xs, Array.from(curve, (v) => sy(v, h, pad, lo, hi)), "#1f5fbf");
  line(ctx, [xs[0], xs[xs.length - 1]], [sy(perfect, h, pad, lo, hi), sy(perfect, h, pad, lo, hi)], "#2a8a2a", [6, 4]);
  ctx.fillStyle = "#c0392b";
  ctx.strokeStyle = "#c0392b";
  for (const p of mcPoints) {
    const x = sx(p.beta, w, pad);
    ctx.beginPath();
    ctx.arc(x, sy(p.mean, h, pad, lo, hi), 3.5, 0, 2 * Math.PI);
    ctx.fill();
    line(ctx, [x, x], [sy(p.mean - p.se, h, pad, lo, hi), sy(p.mean + p.se, h, pad, lo, hi)], "#c0392b");
  }
  ctx.fillStyle = "#333";
  ctx.fillText("asymptotic (blue), perfect knowledge (green), Monte Carlo (red)", pad + 6, 40);
}

function drawVariance() {
  const c = $("variance");
  const ctx = c.getContext("2d");
  const [w, h, pad] = [c.width, c.height, 60];
  const betas = BETAS.filter((b) => b > 1.05);
  const flat = grid.varianceBounds(new Float64Array(betas), $("variant").value);
  const lower = [], upper = [], cap = [];
  for (let i = 0; i < betas.length; i++) {
    lower.push(flat[3 * i]);
    upper.push(flat[3 * i + 1]);
    cap.push(flat[3 * i + 2]);
  }
  const hi = Math.max(...upper.filter(Number.isFinite)) * 1.05;
  axes(ctx, w, h, pad, 0, hi, "variance of total cost");
  const xs = betas.map((b) => sx(b, w, pad));
  ctx.fillStyle = "rgba(31, 95, 191, 0.2)";
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(x, sy(upper[i], h, pad, 0, hi)) : ctx.moveTo(x, sy(upper[i], h, pad, 0, hi))));
  for (let i = xs.length - 1; i >= 0; i--) ctx.lineTo(xs[i], sy(lower[i], h, pad, 0, hi));
  ctx.closePath();
  ctx.fill();
  line(ctx, xs, cap.map((v) => sy(Math.min(v, hi), h, pad, 0, hi)), "#888", [3, 3]);
  ctx.fillStyle = "#333";
  ctx.fillText("bounds on the variance (band), gap cap (dashed)", pad + 6, 40);
}

function rebuild() {
  try {
    grid?.free();
    grid = new Grid($("case").value, Number($("r").value), Number($("snr").value));
    mcPoints = [];
    drawErgodic();
    drawVariance();
    status(`n = ${grid.states()} states, m = ${grid.measurements()} measurements`);
  } catch (e) {
    status(String(e), true);
  }
}

function runMonteCarlo() {
  const trials = Math.max(2, Number($("trials").value) | 0);
  status("running...");
  mcPoints = [];
  // let the status paint before the synchronous loop
  setTimeout(() => {
    try {
      for (const beta of MC_BETAS) {
        const [mean, se] = grid.monteCarlo(beta, trials, 42n);
        mcPoints.push({ beta, mean, se });
      }
      drawErgodic();
      status(`Monte Carlo: ${trials} trials per beta`);
    } catch (e) {
      status(String(e), true);
    }
  }, 20);
}

await init();
for (const id of ["case", "r", "snr"]) $(id).addEventListener("change", rebuild);
$("variant").addEventListener("change", drawVariance);
$("mc").addEventListener("click", runMonteCarlo);
rebuild();
