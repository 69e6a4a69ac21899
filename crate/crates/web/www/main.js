import init, { examples, translate, lookup, analyze } from "./pkg/arsparql_web.js";

const $ = (id) => document.getElementById(id);
let picks = [];

function table(el, rows, columns) {
  el.replaceChildren();
  if (!Array.isArray(rows) || rows.length === 0) {
    el.insertRow().insertCell().textContent = rows.error ?? "no matches";
    return;
  }
  const head = el.createTHead().insertRow();
  for (const c of columns) head.appendChild(document.createElement("th")).textContent = c;
  const body = el.createTBody();
  for (const r of rows) {
    const tr = body.insertRow();
    for (const c of columns) tr.insertCell().textContent = String(r[c]);
  }
}

function run() {
  const r = JSON.parse(translate($("ontology").value, $("question").value, $("tree").value, Uint32Array.from(picks)));
  const result = $("result");
  const choices = $("choices");
  choices.replaceChildren();
  result.className = "";
  $("explain").textContent = r.explain ?? "";
  if (r.error) {
    result.className = "failure";
    result.textContent = r.error;
  } else if (r.pending) {
    result.textContent = `"${r.pending.phrase}" has several readings; pick one:`;
    r.pending.options.forEach((opt, i) => {
      const b = choices.appendChild(document.createElement("button"));
      b.textContent = opt;
      b.onclick = () => { picks.push(i); run(); };
    });
  } else if (r.sparql) {
    result.textContent = [...r.warnings.map((w) => `# warning: ${w}`), r.sparql].join("\n");
  } else {
    result.className = "failure";
    const f = r.failure;
    result.textContent = `${f.stage} failure (${f.code}): ${f.reason}`;
  }
}

await init();

const all = JSON.parse(examples());
const select = $("example");
all.forEach((e, i) => {
  const o = select.appendChild(document.createElement("option"));
  o.value = i;
  o.textContent = `${e.id}: ${e.question}`;
});
select.onchange = () => {
  const e = all[select.value];
  if (!e) return;
  $("ontology").value = e.ontology;
  $("question").value = e.question;
  $("tree").value = e.tree;
};

$("translate").onclick = () => { picks = []; run(); };
$("lookup").onclick = () =>
  table($("matches"), JSON.parse(lookup($("ontology").value, $("phrase").value)), ["term", "kind", "tier", "label"]);
$("analyze").onclick = () =>
  table($("analysis"), JSON.parse(analyze($("words").value)), ["word", "normalized", "stopword", "stem", "skeleton"]);
