import init, { catalog, render_template, counterfactuals, hardness } from "./pkg/tabnli_browser.js";

const $ = (id) => document.getElementById(id);
const esc = (s) => String(s).replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]);
const cells = (values) => values.map(esc).join("; ");

function guarded(target, f) {
  try {
    f();
  } catch (e) {
    $(target).innerHTML = `<p class="error">${esc(e)}</p>`;
  }
}

let data;

function currentTable() {
  return data.tables.find((t) => t.id === $("table").value);
}

function showTable() {
  const t = currentTable();
  $("rows").innerHTML =
    `<table><tr><th colspan="2">${esc(t.title)} (${esc(t.category)})</th></tr>` +
    t.rows.map(([k, v]) => `<tr><td>${esc(k)}</td><td>${cells(v)}</td></tr>`).join("") +
    "</table>";
  const templates = data.templates.filter((x) => x.category === t.category);
  $("template").innerHTML = templates.map((x) => `<option value="${esc(x.id)}">${esc(x.id)}</option>`).join("");
  pickTemplate();
  runCounterfactuals();
}

function pickTemplate() {
  const tpl = data.templates.find((x) => x.id === $("template").value);
  $("body").value = tpl ? tpl.body : "";
  runRender();
}

function runRender() {
  guarded("render-out", () => {
    const r = JSON.parse(render_template($("table").value, $("body").value, Number($("render-seed").value)));
    $("render-out").innerHTML =
      `<p class="muted">${esc(r.premise)}</p><table><tr><th>label</th><th>hypothesis</th><th>strategy</th><th>holds</th></tr>` +
      r.pairs
        .map((p) => `<tr><td class="${p.label}">${p.label}</td><td>${esc(p.sentence)}</td><td>${esc(p.strategy)}</td><td>${p.holds}</td></tr>`)
        .join("") +
      "</table>";
  });
}

function runCounterfactuals() {
  $("p-val").textContent = Number($("p").value).toFixed(2);
  guarded("cf-out", () => {
    const r = JSON.parse(counterfactuals($("table").value, Number($("p").value), Number($("n").value), Number($("cf-seed").value)));
    const rows = r.counterfactuals
      .map((c) => {
        const changes = c.changes
          .map((d) => `${esc(d.key)}: <span class="before">${cells(d.before)}</span> <span class="after">${cells(d.after)}</span>`)
          .join("<br>");
        return `<tr><td>${esc(c.id)}</td><td>${changes}</td></tr>`;
      })
      .join("");
    const skipped = r.skipped.length ? `<p class="muted">skipped: ${r.skipped.map(esc).join("; ")}</p>` : "";
    $("cf-out").innerHTML = `<table><tr><th>table</th><th>changed rows</th></tr>${rows}</table>${skipped}`;
  });
}

function runHardness() {
  $("threshold-val").textContent = $("threshold").value;
  guarded("hard-out", () => {
    const r = JSON.parse(hardness($("matrix").value, Number($("threshold").value)));
    $("hard-out").innerHTML =
      `<table><tr><th>unit</th><th>hard cells</th><th>ranked split</th><th>published split</th></tr>` +
      r.units
        .map((u) => `<tr><td>${esc(u.unit)}</td><td>${u.hard_count}</td><td>${u.ranked}</td><td>${u.published}</td></tr>`)
        .join("") +
      `</table><p>${r.matches_published ? "Ranking matches the published split." : "Ranking differs from the published split."}</p>`;
  });
}

await init();
data = JSON.parse(catalog());
$("table").innerHTML = data.tables.map((t) => `<option value="${esc(t.id)}">${esc(t.title)}</option>`).join("");
$("table").addEventListener("change", showTable);
$("template").addEventListener("change", pickTemplate);
$("body").addEventListener("input", runRender);
$("render-seed").addEventListener("input", runRender);
for (const id of ["p", "n", "cf-seed"]) $(id).addEventListener("input", runCounterfactuals);
for (const id of ["matrix", "threshold"]) $(id).addEventListener("input", runHardness);
showTable();
runHardness();
