import init, { ray_profile, sparsify, ncut_demo } from "./pkg/lvmap_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function bindSliders(ids, redraw) {
  for (const id of ids) {
    const el = $(id);
    const out = el.nextElementSibling;
    const show = () => { out.textContent = " " + el.value; };
    el.addEventListener("input", () => { show(); redraw(); });
    show();
  }
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
}

function polyline(ctx, xs, ys, sx, sy, colour, width = 2) {
  ctx.strokeStyle = colour;
  ctx.lineWidth = width;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function legend(ctx, items, x, y) {
  ctx.font = "12px system-ui";
  items.forEach(([label, colour], i) => {
    ctx.fillStyle = colour;
    ctx.fillRect(x, y + i * 16 - 8, 12, 3);
    ctx.fillStyle = "#222";
    ctx.fillText(label, x + 18, y + i * 16 - 4);
  });
}

function drawRay() {
  const n = num("ray-n");
  const r = ray_profile(num("ray-peak"), num("ray-centre"), num("ray-width"), num("ray-depth"), num("ray-sigma"), n);
  const [depth, opacity, loss] = r;
  const t = r.slice(3, 3 + n);
  const sigma = r.slice(3 + n, 3 + 2 * n);
  const w = r.slice(3 + 2 * n, 3 + 3 * n);
  const target = r.slice(3 + 3 * n, 3 + 4 * n);

  const c = $("ray-canvas"), ctx = c.getContext("2d"), pad = 30;
  axes(ctx, c.width, c.height, pad);
  const sx = (x) => pad + (x / 4) * (c.width - 1.5 * pad);
  const top = Math.max(...w, ...target, 1e-9);
  const sy = (y) => c.height - pad - (y / top) * (c.height - 1.5 * pad);
  const smax = Math.max(...sigma, 1e-9);
  polyline(ctx, t, sigma.map((s) => (s / smax) * top), sx, sy, "#bbb", 1);
  polyline(ctx, t, target, sx, sy, "#2a7");
  polyline(ctx, t, w, sx, sy, "#c33");
  ctx.strokeStyle = "#36c";
  ctx.beginPath();
  ctx.moveTo(sx(depth), pad / 2);
  ctx.lineTo(sx(depth), c.height - pad);
  ctx.stroke();
  legend(ctx, [["weights", "#c33"], ["depth target", "#2a7"], ["density (scaled)", "#bbb"], ["rendered depth", "#36c"]], c.width - 170, 24);
  $("ray-stats").textContent =
    `rendered depth ${depth.toFixed(3)}   opacity Σw ${opacity.toFixed(4)}   residual T ${(1 - opacity).toFixed(4)}   depth loss ${loss.toFixed(4)}`;
}

function drawSparse() {
  const bins = num("sp-bins");
  const r = sparsify(num("sp-n"), num("sp-rho"), bins, BigInt(num("sp-seed")));
  const [ause, ause_random] = r;
  const curve = r.slice(2, 2 + bins);
  const oracle = r.slice(2 + bins, 2 + 2 * bins);
  const random = r.slice(2 + 2 * bins, 2 + 3 * bins);
  const fr = curve.map((_, i) => i / bins);

  const c = $("sp-canvas"), ctx = c.getContext("2d"), pad = 30;
  axes(ctx, c.width, c.height, pad);
  const top = Math.max(...curve, ...random, 1);
  const sx = (x) => pad + x * (c.width - 1.5 * pad);
  const sy = (y) => c.height - pad - (y / top) * (c.height - 1.5 * pad);
  ctx.fillStyle = "rgba(200,50,50,0.12)";
  ctx.beginPath();
  fr.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(curve[i])) : ctx.moveTo(sx(x), sy(curve[i]))));
  for (let i = bins - 1; i >= 0; i--) ctx.lineTo(sx(fr[i]), sy(oracle[i]));
  ctx.fill();
  polyline(ctx, fr, random, sx, sy, "#bbb");
  polyline(ctx, fr, oracle, sx, sy, "#2a7");
  polyline(ctx, fr, curve, sx, sy, "#c33");
  legend(ctx, [["by uncertainty", "#c33"], ["oracle", "#2a7"], ["random", "#bbb"]], c.width - 150, 24);
  $("sp-stats").textContent = `AUSE ${ause.toFixed(4)}   random ranking ${ause_random.toFixed(4)}   (x: fraction removed, y: mean remaining error)`;
}

function drawNcut() {
  const a = num("nc-a"), b = num("nc-b"), n = a + b;
  const r = ncut_demo(a, b, num("nc-bridge"), num("nc-cross"), BigInt(num("nc-seed")));
  const [ncut, planted_ncut] = r;
  const labels = r.slice(2, 2 + n);
  const planted = r.slice(2 + n, 2 + 2 * n);
  const edges = [];
  for (let k = 2 + 2 * n; k + 2 < r.length; k += 3) edges.push([r[k], r[k + 1], r[k + 2]]);

  const c = $("nc-canvas"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const cx = c.width / 2, cy = c.height / 2, rad = Math.min(cx, cy) - 30;
  const pos = [...Array(n).keys()].map((i) => {
    const ang = (2 * Math.PI * i) / n - Math.PI / 2;
    return [cx + rad * Math.cos(ang), cy + rad * Math.sin(ang)];
  });
  const wmax = Math.max(...edges.map((e) => e[2]), 1);
  for (const [i, j, w] of edges) {
    const cut = labels[i] !== labels[j];
    ctx.strokeStyle = cut ? `rgba(200,50,50,${0.2 + 0.8 * w / wmax})` : `rgba(90,90,90,${0.05 + 0.3 * w / wmax})`;
    ctx.lineWidth = cut ? 2 : 1;
    ctx.beginPath();
    ctx.moveTo(...pos[i]);
    ctx.lineTo(...pos[j]);
    ctx.stroke();
  }
  ctx.lineWidth = 1;
  const fill = ["#36c", "#e90"];
  pos.forEach(([x, y], i) => {
    ctx.fillStyle = fill[labels[i]];
    ctx.beginPath();
    ctx.arc(x, y, 9, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = planted[i] ? "#000" : "#fff";
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.lineWidth = 1;
  });
  const agree = labels.every((l, i) => l === planted[i]) || labels.every((l, i) => l !== planted[i]);
  $("nc-stats").textContent =
    `Ncut ${ncut.toFixed(4)}   planted split ${planted_ncut.toFixed(4)}   recovered planted clusters: ${agree ? "yes" : "no"}   (fill: cut side, ring: planted cluster, red: cut edges)`;
}

await init();
bindSliders(["ray-peak", "ray-centre", "ray-width", "ray-depth", "ray-sigma", "ray-n"], drawRay);
bindSliders(["sp-n", "sp-rho", "sp-bins", "sp-seed"], drawSparse);
bindSliders(["nc-a", "nc-b", "nc-bridge", "nc-cross", "nc-seed"], drawNcut);
drawRay();
drawSparse();
drawNcut();
