import init, { stability_rates, clt_samples, coefficient_paths } from "./pkg/relstab_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

function common() {
  return { scenario: $("scenario").value, mode: $("mode").value, seed: BigInt($("seed").value || 0) };
}

// Runs `work` after the status text has painted.
function busy(statusId, work) {
  const status = $(statusId);
  status.textContent = "running...";
  setTimeout(() => {
    const t0 = performance.now();
    try {
      work();
      status.textContent = `${((performance.now() - t0) / 1000).toFixed(2)} s`;
    } catch (e) {
      status.textContent = String(e.message || e);
    }
  }, 20);
}

// Linear or log axes over the given data ranges; returns pixel mappers.
function frame(ctx, xr, yr, opts = {}) {
  const { width: w, height: h } = ctx.canvas;
  const pad = { l: 60, r: 15, t: 15, b: 35 };
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad.l, pad.t, w - pad.l - pad.r, h - pad.t - pad.b);
  const tx = opts.logX ? Math.log10 : (v) => v;
  const ty = opts.logY ? Math.log10 : (v) => v;
  const [x0, x1] = xr.map(tx);
  const [y0, y1] = yr.map(ty);
  const px = (v) => pad.l + ((tx(v) - x0) / (x1 - x0 || 1)) * (w - pad.l - pad.r);
  const py = (v) => h - pad.b - ((ty(v) - y0) / (y1 - y0 || 1)) * (h - pad.t - pad.b);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  for (let i = 0; i <= 4; i++) {
    const fx = x0 + ((x1 - x0) * i) / 4;
    const fy = y0 + ((y1 - y0) * i) / 4;
    const lx = opts.logX ? `1e${fx.toFixed(1)}` : fx.toPrecision(3);
    const ly = opts.logY ? `1e${fy.toFixed(1)}` : fy.toPrecision(3);
    ctx.fillText(lx, pad.l + ((w - pad.l - pad.r) * i) / 4 - 12, h - pad.b + 15);
    ctx.fillText(ly, 4, h - pad.b - ((h - pad.t - pad.b) * i) / 4 + 4);
  }
  if (opts.xlabel) ctx.fillText(opts.xlabel, w / 2, h - 5);
  return { px, py };
}

function line(ctx, pts, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
  ctx.setLineDash([]);
}

function legend(ctx, items) {
  ctx.font = "12px sans-serif";
  items.forEach(([label, color], i) => {
    ctx.fillStyle = color;
    ctx.fillText(label, ctx.canvas.width - 170, 30 + 16 * i);
  });
}

function runRates() {
  const c = common();
  const res = JSON.parse(stability_rates(c.scenario, c.mode, $("rate-grid").value, Number($("rate-m").value), c.seed));
  const series = [
    ["sigma2", COLORS[0]],
    ["gamma", COLORS[1]],
    ["r", COLORS[2]],
  ];
  const ns = res.points.map((p) => p.n);
  const vals = res.points.flatMap((p) => series.map(([k]) => p[k])).filter((v) => v > 0);
  const ctx = $("rates-plot").getContext("2d");
  const { px, py } = frame(ctx, [Math.min(...ns), Math.max(...ns)], [Math.min(...vals), Math.max(...vals)], {
    logX: true,
    logY: true,
    xlabel: "n",
  });
  for (const [key, color] of series) {
    const pts = res.points.filter((p) => p[key] > 0).map((p) => [px(p.n), py(p[key])]);
    line(ctx, pts, color);
    pts.forEach(([x, y]) => ctx.fillRect(x - 2, y - 2, 4, 4));
  }
  legend(ctx, [
    [`sigma2  slope ${res.slope_sigma2.toFixed(2)}`, COLORS[0]],
    [`gamma   slope ${res.slope_gamma.toFixed(2)}`, COLORS[1]],
    [`r       slope ${res.slope_r.toFixed(2)}`, COLORS[2]],
  ]);
  const fmt = (v, se) => `${v.toExponential(3)} ± ${se.toExponential(1)}`;
  $("rates-table").innerHTML =
    "<tr><th>n</th><th>sigma2</th><th>gamma</th><th>r</th></tr>" +
    res.points
      .map((p) => `<tr><td>${p.n}</td><td>${fmt(p.sigma2, p.sigma2_se)}</td><td>${fmt(p.gamma, p.gamma_se)}</td><td>${fmt(p.r, p.r_se)}</td></tr>`)
      .join("");
}

function histogram(values, lo, hi, bins) {
  const counts = new Array(bins).fill(0);
  const width = (hi - lo) / bins;
  for (const v of values) {
    const b = Math.floor((v - lo) / width);
    if (b >= 0 && b < bins) counts[b]++;
  }
  return counts.map((c) => c / (values.length * width));
}

function runClt() {
  const c = common();
  const res = JSON.parse(
    clt_samples(c.scenario, c.mode, Number($("clt-n").value), Number($("clt-reps").value), Number($("clt-m").value), c.seed),
  );
  const lo = -5, hi = 5, bins = 40;
  const hTrue = histogram(res.stat_true_sigma, lo, hi, bins);
  const hHat = histogram(res.stat_hat_sigma, lo, hi, bins);
  const ctx = $("clt-plot").getContext("2d");
  const top = Math.max(0.45, ...hTrue, ...hHat);
  const { px, py } = frame(ctx, [lo, hi], [0, top], { xlabel: "normalized CV error" });
  const width = (hi - lo) / bins;
  const steps = (h) => h.flatMap((d, i) => [[px(lo + i * width), py(d)], [px(lo + (i + 1) * width), py(d)]]);
  line(ctx, steps(hTrue), COLORS[0]);
  line(ctx, steps(hHat), COLORS[1]);
  const normal = [];
  for (let x = lo; x <= hi; x += 0.05) normal.push([px(x), py(Math.exp(-x * x / 2) / Math.sqrt(2 * Math.PI))]);
  line(ctx, normal, "#000", [4, 3]);
  legend(ctx, [
    [`/sigma    var ${res.var_true_sigma.toFixed(3)}`, COLORS[0]],
    [`/sigma_hat var ${res.var_hat_sigma.toFixed(3)}`, COLORS[1]],
    ["N(0, 1)", "#000"],
  ]);
}

function runPaths() {
  const c = common();
  const res = JSON.parse(coefficient_paths(c.scenario, Number($("path-n").value), Number($("path-points").value), c.seed));
  const all = res.lasso.flat().concat(res.soft_threshold.flat());
  const ctx = $("paths-plot").getContext("2d");
  const { px, py } = frame(
    ctx,
    [res.lambdas[0], res.lambdas[res.lambdas.length - 1]],
    [Math.min(0, ...all), Math.max(0, ...all)],
    { logX: true, xlabel: "lambda" },
  );
  res.beta_star.forEach((_, j) => {
    const color = COLORS[j % COLORS.length];
    line(ctx, res.lambdas.map((l, i) => [px(l), py(res.lasso[i][j])]), color);
    line(ctx, res.lambdas.map((l, i) => [px(l), py(res.soft_threshold[i][j])]), color, [3, 3]);
  });
  legend(ctx, [["solid: Lasso", "#000"], ["dashed: soft-threshold", "#000"]]);
}

await init();
$("run-rates").onclick = () => busy("rates-status", runRates);
$("run-clt").onclick = () => busy("clt-status", runClt);
$("run-paths").onclick = () => busy("paths-status", runPaths);
busy("paths-status", runPaths);
