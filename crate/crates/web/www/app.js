import init, { simulate, bestResponse, tightCurve, preset } from "./pkg/probserial_web.js";

const $ = (id) => document.getElementById(id);

// "p/q" strings from the engine
function num(s) {
  if (s === "never") return Infinity;
  const [p, q] = s.split("/");
  return Number(p) / (q === undefined ? 1 : Number(q));
}

function color(item, m) {
  return `hsl(${Math.round((360 * item) / Math.max(m, 1))}, 65%, 62%)`;
}

function drawGantt(trace, title) {
  const cv = $("gantt");
  const rowH = 22, left = 70, top = 24, bottom = 26;
  cv.height = top + bottom + rowH * trace.n;
  const g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  const end = trace.segments.length ? num(trace.segments[trace.segments.length - 1].end) : 1;
  const x = (t) => left + ((cv.width - left - 10) * t) / end;
  g.font = "12px sans-serif";
  g.fillStyle = "#222";
  g.fillText(title, left, 15);
  for (let i = 0; i < trace.n; i++) g.fillText(`agent ${i}`, 4, top + rowH * i + 15);
  for (const seg of trace.segments) {
    const x0 = x(num(seg.start)), x1 = x(num(seg.end));
    seg.eating.forEach((item, i) => {
      if (item === null) return;
      g.fillStyle = color(item, trace.m);
      g.fillRect(x0, top + rowH * i + 2, x1 - x0, rowH - 4);
      if (x1 - x0 > 14) {
        g.fillStyle = "#000";
        g.fillText(String(item), x0 + 3, top + rowH * i + 15);
      }
    });
  }
  g.strokeStyle = "#888";
  g.fillStyle = "#444";
  const y = top + rowH * trace.n + 4;
  for (const seg of [{ end: "0" }, ...trace.segments]) {
    const xt = x(num(seg.end));
    g.beginPath();
    g.moveTo(xt, top);
    g.lineTo(xt, y);
    g.stroke();
  }
  for (let i = 0; i <= 4; i++) {
    const t = (end * i) / 4;
    g.fillText(t.toFixed(2), x(t) - 10, y + 16);
  }
}

function matrix(rows) {
  return rows.map((r, i) => `  ${i}: ` + r.map((v) => v.padEnd(7)).join(" ")).join("\n");
}

function run(action) {
  $("status").textContent = "";
  $("status").className = "";
  try {
    action();
  } catch (e) {
    $("status").textContent = String(e.message || e);
    $("status").className = "error";
  }
}

function onSimulate() {
  const out = JSON.parse(simulate($("instance").value));
  drawGantt(out.trace, "truthful reports");
  let s = "allocation:\n" + matrix(out.trace.allocation);
  s += "\ndepletion: " + out.trace.depletion.join("  ");
  if (out.utility) s += `\nutility of agent ${out.utility.agent}: ${out.utility.value} (${out.utility.decimal})`;
  if (out.interested_completion) s += `\ninterested items finished at ${out.interested_completion}`;
  $("summary").textContent = s;
}

function onBest() {
  const out = JSON.parse(bestResponse($("instance").value));
  const r = out.result;
  drawGantt(out.manipulated_trace, `agent ${r.agent} reports ${r.best_report.join(" ")}`);
  $("summary").textContent =
    `truthful utility: ${r.truthful_utility}\nbest report: ${r.best_report.join(" ")}\n` +
    `best utility: ${r.best_utility}\nratio: ${r.ratio}` +
    (out.ratio_decimal ? ` (${out.ratio_decimal})` : "") +
    `\nreports evaluated: ${r.reports_evaluated}\n\nallocation under the report:\n` +
    matrix(out.manipulated_trace.allocation);
}

function onCurve() {
  const pts = JSON.parse(tightCurve(Number($("nmax").value)));
  const cv = $("plot"), g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  const left = 50, right = 20, top = 15, bottom = 30;
  const nMin = 6, nMax = Math.max(8, pts[pts.length - 1].n);
  const lo = 1.0, hi = 1.55;
  const x = (n) => left + ((cv.width - left - right) * (n - nMin)) / (nMax - nMin);
  const y = (v) => cv.height - bottom - ((cv.height - top - bottom) * (v - lo)) / (hi - lo);
  g.font = "12px sans-serif";
  g.strokeStyle = "#bbb";
  g.fillStyle = "#444";
  for (const v of [1.0, 1.1, 1.2, 1.3, 1.4, 1.5]) {
    g.beginPath();
    g.moveTo(left, y(v));
    g.lineTo(cv.width - right, y(v));
    g.stroke();
    g.fillText(v.toFixed(1), 10, y(v) + 4);
  }
  for (const p of pts) if (p.n % 10 === 0) g.fillText(String(p.n), x(p.n) - 6, cv.height - 10);
  g.strokeStyle = "#c33";
  g.setLineDash([5, 4]);
  g.beginPath();
  g.moveTo(left, y(1.5));
  g.lineTo(cv.width - right, y(1.5));
  g.stroke();
  g.setLineDash([]);
  g.strokeStyle = "#1f5fa8";
  g.fillStyle = "#1f5fa8";
  g.beginPath();
  pts.forEach((p, i) => (i ? g.lineTo(x(p.n), y(num(p.ratio))) : g.moveTo(x(p.n), y(num(p.ratio)))));
  g.stroke();
  for (const p of pts) {
    g.beginPath();
    g.arc(x(p.n), y(num(p.ratio)), 2.5, 0, 2 * Math.PI);
    g.fill();
  }
  const last = pts[pts.length - 1];
  g.fillText(`n = ${last.n}: ${last.ratio} = ${last.decimal}`, left + 8, top + 12);
}

function onLoad() {
  const kind = $("preset").value;
  $("instance").value = preset(kind, Number($("n").value), Number($("m").value), Number($("k").value), BigInt($("seed").value));
  onSimulate();
}

await init();
$("load").onclick = () => run(onLoad);
$("simulate").onclick = () => run(onSimulate);
$("best").onclick = () => run(onBest);
$("curve").onclick = () => run(onCurve);
run(onLoad);
run(onCurve);
