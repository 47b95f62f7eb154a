import type { ReviewStore } from "./store";
import type { Candidate, DomainAggregate } from "./types";

const escapeHtml = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

const pct = (p: number) => `${Math.floor(p + 0.5)}%`;

function decisionButtons(candidate: Candidate, standardRef: number): string {
  return (["accept", "reject", "flag"] as const)
    .map(
      (d) =>
        `<button class="decide ${d}" data-standard="${standardRef}" ` +
        `data-spec="${candidate.ref}" data-decision="${d}">${d}</button>`,
    )
    .join(" ");
}

function badge(candidate: Candidate): string {
  if (candidate.step === null) return "";
  const inc = candidate.increment === null ? "" : ` +${candidate.increment.toFixed(2)} R²`;
  return `<span class="badge step-${candidate.step}">step ${candidate.step}${inc}</span>`;
}

/** Ranked candidate list for one standard, decisions and badges inline. */
export function renderReview(store: ReviewStore, standardRef: number): string {
  const payload = store.candidatesByRef.get(standardRef);
  if (!payload) return `<p class="loading">loading candidates…</p>`;
  const { standard, candidates } = payload;

  const warning = store.coverageWarning(standardRef)
    ? `<p class="warning" data-role="coverage-warning">Every decision so far rejects a match — this standard has no accepted coverage yet.</p>`
    : "";
  const banner = store.offline
    ? `<p class="banner" data-role="retry-banner">Server unreachable — decisions are queued locally. <button data-role="retry">retry</button></p>`
    : "";
  const inlineError = store.inlineError
    ? `<p class="error" data-role="inline-error">${escapeHtml(store.inlineError)}</p>`
    : "";

  const rows = candidates
    .map((candidate) => {
      const decisions = store
        .decisionsFor(standardRef, candidate.ref)
        .map(
          (r) =>
            `<span class="decision ${r.decision}" data-role="decision" ` +
            `data-spec="${r.spec_ref}">${r.reviewer}: ${r.decision}</span>`,
        )
        .join(" ");
      return `
      <li class="candidate" data-spec="${candidate.ref}">
        <span class="rank">#${candidate.rank}</span>
        <span class="sim">${candidate.similarity.toFixed(3)}</span>
        <span class="spec-id">${escapeHtml(candidate.id)}</span>
        ${badge(candidate)}
        <p class="text">${escapeHtml(candidate.text)}</p>
        <div class="decisions">${decisions || `<span class="undecided">undecided</span>`}</div>
        <div class="actions">${decisionButtons(candidate, standardRef)}</div>
      </li>`;
    })
    .join("\n");

  return `
  <section class="review" data-standard="${standardRef}">
    ${banner}${inlineError}${warning}
    <header>
      <h2>${escapeHtml(standard.id)} <small>(ref ${standard.ref}, ${escapeHtml(standard.domain_name)})</small></h2>
      <p class="standard-text">${escapeHtml(standard.text)}</p>
    </header>
    <ol class="candidates">${rows}</ol>
  </section>`;
}

function aggregateTable(agg: DomainAggregate): string {
  const rows = agg.domains
    .map(
      (d) =>
        `<tr><td>${escapeHtml(d.name)}</td><td>${d.weight_sum.toFixed(2)}</td><td>${pct(d.percent)}</td></tr>`,
    )
    .join("");
  return `
  <table class="aggregate" data-side="${agg.side}">
    <caption>Percent of summed R² by domain (${agg.side} side)</caption>
    <thead><tr><th>Domain</th><th>Weight</th><th>Percent</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

/** Domain coverage tables plus reviewing progress. */
export function renderDashboard(store: ReviewStore): string {
  const aggregates = store.report?.report?.aggregates;
  const stale = store.staleArtifacts
    ? `<p class="warning" data-role="stale-banner">Artifacts changed under this session — reload before trusting these numbers.</p>`
    : "";
  const tables = aggregates
    ? Object.values(aggregates).map(aggregateTable).join("\n")
    : `<p class="loading">no report loaded</p>`;
  const { decided, total } = store.progress();
  const items = store.standards
    .map((s) => {
      const decidedHere = [...store.latest.values()].some((r) => r.standard_ref === s.ref);
      return `<li data-ref="${s.ref}" class="${decidedHere ? "decided" : "undecided"}">
        <a href="#/standard/${s.ref}">${escapeHtml(s.id)}</a> ${decidedHere ? "✓" : "·"}
      </li>`;
    })
    .join("");
  const exportButton = `<button data-role="export" ${store.canExport() ? "" : "disabled"}>Export crosswalk</button>`;
  return `
  <section class="dashboard">
    ${stale}
    ${tables}
    <p class="progress" data-role="progress">Progress: ${decided}/${total} standards decided</p>
    ${exportButton}
    <ul class="standards">${items}</ul>
  </section>`;
}

/** Top-level chrome: navigation plus the active view. */
export function renderApp(store: ReviewStore, route: string): string {
  const match = route.match(/^#\/standard\/(\d+)$/);
  const body = match ? renderReview(store, Number(match[1])) : renderDashboard(store);
  return `
  <nav>
    <a href="#/dashboard">Coverage dashboard</a>
    <label>Reviewer: <input data-role="reviewer" value="${escapeHtml(store.reviewer)}"></label>
    <span class="pending" data-role="pending-count">${store.pending.length} queued</span>
  </nav>
  <main>${body}</main>`;
}
