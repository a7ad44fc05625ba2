import init, { generateCrown, traceRealization, fresnelCurve } from "./pkg/foliage_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

let crown = null;
let yaw = 0.6;
let pitch = 0.5;

function project(p, cx, cy, scale) {
  const [x, y, z] = [p[0] - 15, p[1], p[2] - 1.5];
  const xr = x * Math.cos(yaw) - y * Math.sin(yaw);
  const yr = x * Math.sin(yaw) + y * Math.cos(yaw);
  const yp = yr * Math.cos(pitch) - z * Math.sin(pitch);
  return [cx + xr * scale, cy + yp * scale];
}

function drawMesh(ctx, vertices, faces, style, fill, cx, cy, scale) {
  const pt = (i) => project(vertices.slice(3 * i, 3 * i + 3), cx, cy, scale);
  ctx.strokeStyle = style;
  ctx.fillStyle = fill;
  for (let f = 0; f < faces.length; f += 3) {
    const [a, b, c] = [pt(faces[f]), pt(faces[f + 1]), pt(faces[f + 2])];
    ctx.beginPath();
    ctx.moveTo(...a);
    ctx.lineTo(...b);
    ctx.lineTo(...c);
    ctx.closePath();
    if (fill) ctx.fill();
    ctx.stroke();
  }
}

function drawGeometry() {
  const canvas = $("geometry");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!crown) return;
  const scale = canvas.width / 36;
  const [cx, cy] = [canvas.width / 2, canvas.height / 2];
  ctx.lineWidth = 0.5;
  drawMesh(ctx, crown.envelope_vertices, crown.envelope_faces, "rgba(60,120,60,0.25)", null, cx, cy, scale);
  drawMesh(ctx, crown.soup_vertices, crown.soup_faces, "rgba(20,90,20,0.9)", "rgba(60,160,60,0.35)", cx, cy, scale);
  const tx = project(crown.tx, cx, cy, scale);
  const rx = project(crown.rx, cx, cy, scale);
  ctx.strokeStyle = "#888";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(...tx);
  ctx.lineTo(...rx);
  ctx.stroke();
  ctx.setLineDash([]);
  for (const [p, label, color] of [[tx, "TX", "#c33"], [rx, "RX", "#33c"]]) {
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(p[0], p[1], 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(label, p[0] + 6, p[1] - 6);
  }
}

function axes(ctx, w, h, pad, xr, yr, xlabel, ylabel) {
  ctx.strokeStyle = "#333";
  ctx.fillStyle = "#333";
  ctx.strokeRect(pad, pad / 2, w - 1.5 * pad, h - 1.5 * pad);
  for (let k = 0; k <= 4; k++) {
    const x = xr[0] + (k / 4) * (xr[1] - xr[0]);
    const y = yr[0] + (k / 4) * (yr[1] - yr[0]);
    ctx.fillText(x.toFixed(1), pad + (k / 4) * (w - 1.5 * pad) - 8, h - pad + 14);
    ctx.fillText(y.toFixed(1), 2, h - pad - (k / 4) * (h - 1.5 * pad) + 4);
  }
  ctx.fillText(xlabel, w / 2 - 20, h - 4);
  ctx.fillText(ylabel, pad + 4, pad / 2 + 12);
}

function plotLines(canvas, series, xr, yr, xlabel, ylabel) {
  const ctx = canvas.getContext("2d");
  const [w, h, pad] = [canvas.width, canvas.height, 44];
  ctx.clearRect(0, 0, w, h);
  axes(ctx, w, h, pad, xr, yr, xlabel, ylabel);
  const sx = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0])) * (w - 1.5 * pad);
  const sy = (y) => h - pad - ((Math.max(y, yr[0]) - yr[0]) / (yr[1] - yr[0])) * (h - 1.5 * pad);
  for (const { xs, ys, color, stems } of series) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    if (stems) {
      xs.forEach((x, i) => {
        ctx.moveTo(sx(x), sy(yr[0]));
        ctx.lineTo(sx(x), sy(ys[i]));
      });
    } else {
      xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
    }
    ctx.stroke();
  }
}

function showError(e) {
  $("stats").innerHTML = `<span class="error">${e}</span>`;
}

function generate() {
  try {
    crown = JSON.parse(generateCrown(num("volume"), num("rho"), num("sigma"), num("seed")));
    drawGeometry();
  } catch (e) {
    showError(e);
  }
}

function trace() {
  generate();
  try {
    const t0 = performance.now();
    const r = JSON.parse(traceRealization(num("volume"), num("rho"), num("sigma"), num("seed"), num("rays")));
    const ms = performance.now() - t0;
    const top = Math.ceil(Math.max(...r.power_dbm) / 10) * 10;
    plotLines(
      $("pdp"),
      [
        { xs: r.mpc_delay_ns, ys: r.mpc_power_dbm, color: "rgba(200,80,40,0.6)", stems: true },
        { xs: r.delay_ns, ys: r.power_dbm, color: "#1a4" },
      ],
      [Math.min(...r.delay_ns), Math.max(...r.delay_ns)],
      [top - 60, top],
      "delay (ns)",
      "power (dBm)",
    );
    $("stats").textContent =
      `MPCs ${r.n_mpcs}   RSS ${r.rss_dbm.toFixed(2)} dBm   PL ${r.pl_db.toFixed(2)} dB ` +
      `(excess ${r.excess_loss_db.toFixed(2)} dB)   D_RMS ${r.drms_ns.toFixed(3)} ns   ${ms.toFixed(0)} ms`;
  } catch (e) {
    showError(e);
  }
}

function fresnel() {
  try {
    const f = JSON.parse(fresnelCurve(num("eps"), num("kappa"), num("freq"), 181));
    plotLines(
      $("fresnelPlot"),
      [
        { xs: f.angle_deg, ys: f.te, color: "#c33" },
        { xs: f.angle_deg, ys: f.tm, color: "#33c" },
      ],
      [0, 90],
      [0, 1],
      "incidence angle (deg): TE red, TM blue",
      "|reflection coefficient|",
    );
  } catch (e) {
    showError(e);
  }
}

function enableDrag() {
  const canvas = $("geometry");
  let last = null;
  canvas.addEventListener("mousedown", (e) => (last = [e.clientX, e.clientY]));
  window.addEventListener("mouseup", () => (last = null));
  window.addEventListener("mousemove", (e) => {
    if (!last) return;
    yaw += (e.clientX - last[0]) * 0.01;
    pitch = Math.max(-1.5, Math.min(1.5, pitch + (e.clientY - last[1]) * 0.01));
    last = [e.clientX, e.clientY];
    drawGeometry();
  });
}

await init();
$("generate").addEventListener("click", generate);
$("trace").addEventListener("click", trace);
$("fresnel").addEventListener("click", fresnel);
enableDrag();
generate();
fresnel();
