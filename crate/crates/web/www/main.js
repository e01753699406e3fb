import init, { quadratize, dissipate, simulate } from "./pkg/dissquad_web.js";

const presets = [
  { name: "Three equilibria, a = 1", system: "x' = -x*(x - 1)*(x - 2)", eq: "(0); (2)", x0: "(1.5)", t: "10", rule: "fewest-lifted" },
  { name: "Duffing oscillator", system: "x1' = x2\nx2' = x1^3 - x1 - x2", eq: "(0, 0)", x0: "(0.1, 0.1)", t: "20", rule: "fewest-lifted" },
  { name: "Bistable switch", system: "x' = 0.4*x^2 - x^3 - 0.03*x", eq: "(0); (3/10)", x0: "(0.4)", t: "200", rule: "most-lifted" },
  { name: "Cubic x' = -x + x^3", system: "x' = -x + x^3", eq: "(0)", x0: "(0.1)", t: "10", rule: "most-lifted" },
  { name: "Unstable quadratic lift", system: "x' = -x + x*y\ny' = 10*y - 12*x^2 + 2*y^2", eq: "", x0: "(0.1, 0.01)", t: "10", rule: "fewest-lifted", nolift: true },
  { name: "Stabilizers example", system: "x1' = -3*x1 + x2^4\nx2' = -2*x2 + x1^2", eq: "(0, 0)", x0: "(0.5, 0.5)", t: "5", rule: "fewest-lifted" },
];

const $ = (id) => document.getElementById(id);
const out = $("out");
const canvas = $("plot");
const ctx = canvas.getContext("2d");
const colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

function loadPreset(i) {
  const p = presets[i];
  $("system").value = p.system;
  $("equilibria").value = p.eq;
  $("x0").value = p.x0;
  $("tend").value = p.t;
  $("rule").value = p.rule;
  $("lift").checked = !p.nolift;
}

function show(text, isError) {
  out.textContent = text;
  out.className = isError ? "err" : "";
}

function guard(f) {
  try {
    f();
  } catch (e) {
    show(String(e), true);
  }
}

function clear() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  $("legend").textContent = "";
  $("trace").textContent = "";
}

function niceBounds(lo, hi) {
  if (!isFinite(lo) || !isFinite(hi)) return [-1, 1];
  if (lo === hi) return [lo - 1, hi + 1];
  const pad = 0.06 * (hi - lo);
  return [lo - pad, hi + pad];
}

// Axes with a few labelled ticks; returns the data -> pixel maps.
function axes(xr, yr, xlabel, ylabel) {
  const m = { l: 70, r: 20, t: 20, b: 50 };
  const w = canvas.width - m.l - m.r;
  const h = canvas.height - m.t - m.b;
  const sx = (x) => m.l + ((x - xr[0]) / (xr[1] - xr[0])) * w;
  const sy = (y) => m.t + h - ((y - yr[0]) / (yr[1] - yr[0])) * h;
  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#444";
  ctx.font = "20px sans-serif";
  ctx.lineWidth = 1;
  ctx.strokeRect(m.l, m.t, w, h);
  for (let k = 0; k <= 4; k++) {
    const x = xr[0] + (k / 4) * (xr[1] - xr[0]);
    const y = yr[0] + (k / 4) * (yr[1] - yr[0]);
    ctx.fillText(x.toPrecision(3), sx(x) - 20, m.t + h + 26);
    ctx.fillText(y.toPrecision(3), 4, sy(y) + 6);
  }
  ctx.fillText(xlabel, m.l + w / 2 - 10, canvas.height - 4);
  ctx.save();
  ctx.translate(14, m.t + h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  return { sx, sy };
}

function legend(items) {
  $("legend").innerHTML = items
    .map(([name, color, dashed]) => `<span style="color:${color};margin-right:1rem">${dashed ? "- -" : "&mdash;"} ${name}</span>`)
    .join("");
}

function plotSimulation(r) {
  clear();
  const series = [];
  const orig = r.original;
  orig.names.forEach((n, j) => series.push({ name: n, t: orig.times, v: orig.states.map((s) => s[j]), color: colors[j % colors.length], dashed: false }));
  if (r.lifted) {
    const l = r.lifted;
    l.names.forEach((n, j) =>
      series.push({ name: `${n} (lifted)`, t: l.times, v: l.states.map((s) => s[j]), color: colors[j % colors.length], dashed: true }));
  }
  const all = series.flatMap((s) => s.v).filter(isFinite);
  const tmax = Math.max(...series.map((s) => s.t[s.t.length - 1] ?? 0));
  const { sx, sy } = axes([0, tmax || 1], niceBounds(Math.min(...all), Math.max(...all)), "t", "state");
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.dashed ? 3 : 2;
    ctx.setLineDash(s.dashed ? [10, 8] : []);
    ctx.beginPath();
    s.t.forEach((t, k) => (k ? ctx.lineTo(sx(t), sy(s.v[k])) : ctx.moveTo(sx(t), sy(s.v[k]))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  legend(series.map((s) => [s.name, s.color, s.dashed]));
}

function plotEigenvalues(r) {
  clear();
  const rows = r.plot;
  const pts = rows.flatMap((row, i) => row.points.flatMap((p) => p.eigenvalues.map((z) => ({ ...z, i }))));
  const res = pts.map((z) => z.re).concat([0]);
  const ims = pts.map((z) => z.im).concat([0]);
  const { sx, sy } = axes(niceBounds(Math.min(...res), Math.max(...res)), niceBounds(Math.min(...ims), Math.max(...ims)), "Re", "Im");
  ctx.strokeStyle = "#bbb";
  ctx.setLineDash([6, 6]);
  ctx.beginPath();
  ctx.moveTo(sx(0), sy(Math.min(...ims) - 1e9));
  ctx.lineTo(sx(0), sy(Math.max(...ims) + 1e9));
  ctx.stroke();
  ctx.setLineDash([]);
  for (const z of pts) {
    ctx.fillStyle = colors[z.i % colors.length];
    ctx.beginPath();
    ctx.arc(sx(z.re), sy(z.im), 7, 0, 2 * Math.PI);
    ctx.fill();
  }
  legend(rows.map((row, i) => [`λ = ${row.lambda}`, colors[i % colors.length], false]));

  const fmt = (p) =>
    p.exact_eigenvalues ? p.exact_eigenvalues.join(", ") : (p.eigenvalues || []).map((z) => (z.im ? `${z.re}${z.im < 0 ? "-" : "+"}${Math.abs(z.im)}i` : z.re)).join(", ");
  let html = "<table><tr><th>λ</th><th>point</th><th>verdict</th><th>eigenvalues</th></tr>";
  for (const step of r.trace) {
    for (const p of step.points) {
      html += `<tr><td>${step.lambda}</td><td>(${p.point.join(", ")})</td><td class="${p.verdict}">${p.verdict}</td><td>${fmt(p)}</td></tr>`;
    }
  }
  $("trace").innerHTML = html + "</table>";
}

function summary(r) {
  const lines = [];
  lines.push(r.new_variables.length ? `new variables: ${r.new_variables.join(", ")}` : "already quadratic");
  lines.push(...r.equations);
  if (r.lambda !== undefined) lines.push(`lambda = ${r.lambda} (${r.mode})`);
  for (const w of r.warnings || []) lines.push(`warning: ${w}`);
  return lines.join("\n");
}

async function main() {
  await init();
  presets.forEach((p, i) => $("preset").add(new Option(p.name, i)));
  $("preset").onchange = (e) => loadPreset(+e.target.value);
  loadPreset(0);

  $("btn-quad").onclick = () =>
    guard(() => {
      clear();
      show(summary(JSON.parse(quadratize($("system").value, $("rule").value))));
    });

  $("btn-diss").onclick = () =>
    guard(() => {
      const r = JSON.parse(dissipate($("system").value, $("equilibria").value, $("mode").value, $("rule").value));
      show(summary(r));
      plotEigenvalues(r);
    });

  $("btn-sim").onclick = () =>
    guard(() => {
      const lift = $("lift").checked;
      const r = JSON.parse(simulate($("system").value, $("x0").value, parseFloat($("tend").value), lift, lift ? $("equilibria").value : "", $("rule").value));
      const lines = [`original: ${r.original.status}`];
      if (r.lifted) {
        lines.push(`lifted: ${r.lifted.status}`, `new variables: ${r.new_variables.join(", ") || "none"}`, `lambda = ${r.lambda}`);
        lines.push(`max deviation ${r.max_deviation.toExponential(2)}, invariant drift ${r.max_invariant_drift.toExponential(2)}`);
      }
      show(lines.join("\n"));
      plotSimulation(r);
    });
}

main();
