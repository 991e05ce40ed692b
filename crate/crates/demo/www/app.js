import init, { annotate_json, extract_json, segment_json } from "./pkg/gzm_demo.js";

const $ = (id) => document.getElementById(id);

function escape(s) {
  return s.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]);
}

// Offsets from the library are in characters, so split by code point.
function chars() {
  return Array.from($("text").value.replace(/[\r\n]/g, ""));
}

function table(head, rows) {
  const th = head.map((h) => `<th>${escape(h)}</th>`).join("");
  const tr = rows.map((r) => `<tr>${r.map((c) => `<td>${escape(String(c ?? ""))}</td>`).join("")}</tr>`).join("");
  return `<table><tr>${th}</tr>${tr}</table>`;
}

function highlight(spans) {
  const text = chars();
  const at = new Map();
  for (const s of spans) {
    if (!at.has(s.start) || at.get(s.start).end < s.end) at.set(s.start, s);
  }
  let html = "";
  for (let i = 0; i < text.length; ) {
    const s = at.get(i);
    if (s) {
      html += `<mark class="${s.label}" title="${s.label} ${[...s.dynasties].join(",")}">${escape(text.slice(s.start, s.end).join(""))}</mark>`;
      i = s.end;
    } else {
      html += escape(text[i]);
      i += 1;
    }
  }
  $("text-view").innerHTML = html;
}

function run(op) {
  $("error").textContent = "";
  try {
    op();
  } catch (e) {
    $("error").textContent = String(e.message ?? e);
  }
}

function annotate() {
  const out = JSON.parse(annotate_json($("text").value, $("lexicon").value, 6));
  highlight(out.spans);
  $("result").innerHTML =
    "<h2>Consistent sequences</h2>" +
    table(
      ["dynasty", "labels"],
      out.sequences.map((s) => [s.dynasty, s.spans.map((x) => `${x.label}(${x.surface})`).join(" ")]),
    );
}

function extract() {
  const out = JSON.parse(extract_json($("text").value, $("lexicon").value, $("persons").value));
  $("text-view").textContent = chars().join("");
  $("result").innerHTML =
    "<h2>Candidate records</h2>" +
    table(
      ["dynasty", "name", "style", "offset", "source", "match type"],
      out.map((r) => [
        r.record.dynasty,
        r.record.official_name,
        r.record.style_name,
        r.record.name_start,
        r.record.source,
        `${r.match_type.scheme}:${r.match_type.type_id}`,
      ]),
    );
}

function segment() {
  const out = JSON.parse(segment_json($("text").value, $("lexicon").value));
  const text = chars();
  const starts = new Set(out.beginnings.map((b) => b.position));
  $("text-view").innerHTML = text
    .map((c, i) => (starts.has(i) ? `<span class="break">${escape(c)}</span>` : escape(c)))
    .join("");
  $("result").innerHTML =
    "<h2>Paragraph beginnings</h2>" +
    table(
      ["offset", "origin", "paragraph"],
      out.beginnings.map((b) => {
        const p = out.paragraphs.find((q) => q.start === b.position);
        return [b.position, b.origin, p ? text.slice(p.start, p.end).join("") : ""];
      }),
    );
}

await init();
for (const [id, op] of [["annotate", annotate], ["extract", extract], ["segment", segment]]) {
  $(id).disabled = false;
  $(id).addEventListener("click", () => run(op));
}
