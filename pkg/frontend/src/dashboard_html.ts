// Single-file operator console. The page talks to the backend directly
// with fetch and re-renders from scratch on every poll; all logic that
// deserves tests lives in the sibling modules, this is the shell.

export interface DashboardConfig {
  baseUrl: string;
  token?: string;
  pollSeconds?: number;
}

export function renderDashboardHtml(config: DashboardConfig): string {
  const base = config.baseUrl.replace(/\/+$/, "");
  const token = config.token ?? "";
  const pollMs = (config.pollSeconds ?? 30) * 1000;
  return `<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<meta name="viewport" content="width=device-width, initial-scale=1">
<title>Grid Operations Console</title>
<style>
  :root { --bg:#f4f6f8; --card:#fff; --text:#1f2933; --muted:#52606d;
          --hot:#b42318; --ok:#137333; --border:#d9e2ec; --accent:#0057b8; }
  body { margin:0; font-family:ui-sans-serif,-apple-system,Segoe UI,sans-serif;
         color:var(--text); background:var(--bg); }
  header { padding:18px 24px 6px; display:flex; align-items:baseline; gap:14px; }
  h1 { margin:0; font-size:20px; }
  .sub { color:var(--muted); font-size:12px; }
  .wrap { padding:0 24px 24px; }
  .banner { border-radius:8px; padding:8px 12px; margin:10px 0; font-size:13px; }
  .banner.error { background:#fdecec; color:var(--hot); }
  .banner.forbidden { background:#fff4e5; color:#9a6700; }
  .stale-badge { background:#fff4e5; color:#9a6700; border-radius:999px;
                 padding:2px 10px; font-size:12px; }
  .site-grid { display:grid; grid-template-columns:repeat(auto-fill,minmax(150px,1fr));
               gap:8px; margin:14px 0; }
  .cell { background:var(--card); border:1px solid var(--border); border-radius:10px;
          padding:10px; cursor:pointer; }
  .cell.hot { border-color:var(--hot); box-shadow:0 0 0 1px var(--hot); }
  .cell.downtime { opacity:0.55; }
  .site-name { font-weight:700; display:block; font-size:13px; }
  .counts { color:var(--muted); font-size:12px; }
  .downtime-tag { font-size:10px; color:var(--muted); text-transform:uppercase; }
  table.alarms { width:100%; border-collapse:collapse; background:var(--card);
                 border:1px solid var(--border); border-radius:10px; overflow:hidden; }
  .alarms th, .alarms td { text-align:left; padding:7px 10px; font-size:12px;
                           border-bottom:1px solid var(--border); }
  .alarms th { text-transform:uppercase; color:var(--muted); font-size:11px; }
  button.act, button.retry { background:var(--accent); color:#fff; border:none;
          border-radius:6px; padding:3px 9px; font-size:11px; cursor:pointer; }
  .empty { color:var(--muted); font-style:italic; }
  .email-preview { background:var(--card); border:1px dashed var(--border);
                   border-radius:8px; padding:10px; margin:8px 0; font-size:12px; }
  .email-preview .hdr { font-weight:600; }
  .email-preview pre { margin:6px 0 0; white-space:pre-wrap; font-size:12px; }
  .compose label { display:block; margin:6px 0; font-size:12px; }
  .compose input { width:320px; padding:4px 6px; }
  .problems { color:var(--hot); font-size:12px; }
  .masked-by, .ticket-link { font-size:11px; color:var(--muted); }
</style>
</head>
<body>
<header>
  <h1>Grid Operations Console</h1>
  <span class="sub" id="clock"></span>
  <span class="sub" id="poll-note">polling every ${pollMs / 1000}s</span>
</header>
<div class="wrap">
  <div id="notice"></div>
  <div id="grid"><p class="empty">loading sites…</p></div>
  <h2 id="detail-title" style="font-size:15px"></h2>
  <div id="alarms"></div>
  <div id="compose"></div>
</div>
<script>
var BASE = ${JSON.stringify(base)};
var TOKEN = ${JSON.stringify(token)};
var selected = "";
var lastSeq = 0, shownSeq = 0;

function headers(extra) {
  var h = extra || {};
  if (TOKEN) h["Authorization"] = "Bearer " + TOKEN;
  return h;
}

async function call(method, path, body) {
  var opts = { method: method, headers: headers(
    body === undefined ? {} : { "Content-Type": "application/json" }) };
  if (body !== undefined) opts.body = JSON.stringify(body);
  var res = await fetch(BASE + path, opts);
  var data = {};
  try { data = await res.json(); } catch (e) { /* empty body */ }
  if (!res.ok) {
    var env = data.error || {};
    var err = new Error(env.message || res.statusText);
    err.code = env.code || ("HTTP_" + res.status);
    err.status = res.status;
    err.details = env.details || {};
    throw err;
  }
  return data;
}

function esc(s) {
  return String(s).replace(/&/g, "&amp;").replace(/</g, "&lt;")
                  .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function notice(err) {
  var box = document.getElementById("notice");
  if (!err) { box.innerHTML = ""; return; }
  if (err.status === 403) {
    box.innerHTML = '<div class="banner forbidden">insufficient role: '
      + esc(err.message) + '</div>';
  } else if (err.status === 503) {
    var at = err.details && typeof err.details.generated_at === "number"
      ? "t=" + err.details.generated_at.toFixed(3) : "unknown time";
    box.innerHTML = '<span class="stale-badge">stale data from ' + at
      + ' (' + esc(err.code) + ')</span>';
  } else {
    box.innerHTML = '<div class="banner error"><code>' + esc(err.code)
      + '</code> ' + esc(err.message)
      + ' <button class="retry" onclick="refreshGrid()">retry</button></div>';
  }
}

function cellHtml(site) {
  var cls = "cell" + (Number(site["@open-alarms"]) > 0 ? " hot" : "")
    + (site["@in-downtime"] === "true" ? " downtime" : "");
  var name = esc(site["@name"]);
  return '<div class="' + cls + '" data-site="' + name
    + '" onclick="selectSite(\\'' + name + '\\')">'
    + '<span class="site-name">' + name + '</span>'
    + '<span class="counts"><b>' + site["@open-alarms"] + '</b> alarms / <b>'
    + site["@open-tickets"] + '</b> tickets</span>'
    + (site["@in-downtime"] === "true"
       ? '<span class="downtime-tag">downtime</span>' : "")
    + '</div>';
}

function asArray(v) { return v == null ? [] : Array.isArray(v) ? v : [v]; }

async function refreshGrid() {
  var seq = ++lastSeq;
  try {
    var doc = await call("GET", "/sites");
    if (seq < shownSeq) return;  // an older poll lost the race
    shownSeq = seq;
    var sites = asArray((doc.sites || {}).site);
    sites.sort(function (a, b) {
      return Number(b["@open-alarms"]) - Number(a["@open-alarms"])
        || String(a["@name"]).localeCompare(String(b["@name"]));
    });
    document.getElementById("grid").innerHTML = sites.length
      ? '<div class="site-grid">' + sites.map(cellHtml).join("") + '</div>'
      : '<p class="empty">no sites registered</p>';
    notice(null);
  } catch (err) {
    if (seq < shownSeq) return;
    shownSeq = seq;
    notice(err);
  }
  var t = await call("GET", "/health");
  document.getElementById("clock").textContent = "t=" + t.time;
}

var ACTIONS = { NEW: ["assign", "mask", "set-off"], ASSIGNED: ["close"],
                MASKED: ["unmask"], OFF: ["close"], CLOSED: [] };

function alarmRow(a) {
  var acts = (ACTIONS[a["@status"]] || []).map(function (act) {
    return '<button class="act" onclick="alarmAction(\\'' + esc(a["@id"])
      + '\\',\\'' + act + '\\')">' + act + '</button>';
  }).join(" ");
  return '<tr><td>' + esc(a["@id"]) + '</td><td>' + esc(a["@node"])
    + '</td><td>' + esc(a["@test"]) + '</td><td>' + a["@status"]
    + (a["@masked-by"] ? ' <span class="masked-by">masked by '
       + esc(a["@masked-by"]) + '</span>' : "")
    + '</td><td>' + esc(a["@assignee"] || "") + '</td><td>'
    + esc(a["@ticket"] || "") + '</td><td>' + acts + '</td></tr>';
}

async function selectSite(name) {
  selected = name;
  document.getElementById("detail-title").textContent = name;
  var doc = await call("GET", "/alarms?site=" + encodeURIComponent(name));
  var rows = asArray((doc.alarms || {}).alarm);
  document.getElementById("alarms").innerHTML = rows.length
    ? '<table class="alarms"><thead><tr><th>id</th><th>node</th><th>test</th>'
      + '<th>status</th><th>assignee</th><th>ticket</th><th>actions</th></tr>'
      + '</thead><tbody>' + rows.map(alarmRow).join("") + '</tbody></table>'
    : '<p class="empty">no alarms</p>';
}

async function alarmAction(id, action) {
  try {
    var body = { action: action };
    if (action === "assign") body.assignee = "cod";
    if (action === "mask") {
      body.master = window.prompt("master alarm id") || "";
    }
    await call("POST", "/alarms/" + encodeURIComponent(id) + "/transition", body);
    notice(null);
  } catch (err) {
    notice(err);  // rejected actions say why, code verbatim
  }
  if (selected) await selectSite(selected);  // re-render server truth
  await refreshGrid();
}

refreshGrid();
setInterval(refreshGrid, ${pollMs});
</script>
</body>
</html>`;
}
