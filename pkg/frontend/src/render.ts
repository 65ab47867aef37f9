// Pure view builders: state in, HTML string out. No analytics happen here;
// every rendered number comes straight from an API payload, so the views
// are testable without a browser.

import { totalPages } from './api.js';
import type {
  AnalysisPayload,
  Annotation,
  ManifestSlice,
  SessionRecordPayload,
} from './types.js';

export function escapeHtml(value: unknown): string {
  return String(value)
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function offlineBanner(baseUrl: string): string {
  return (
    `<div class="banner offline" role="alert">` +
    `Service at ${escapeHtml(baseUrl)} is unreachable. Sessions cannot be loaded.` +
    `<button data-action="retry">Retry</button></div>`
  );
}

export function tokenPrompt(): string {
  return (
    `<div class="banner auth" role="alert">This server requires an access token.` +
    `<form data-form="token"><input name="token" type="password" placeholder="bearer token"/>` +
    `<button type="submit">Use token</button></form></div>`
  );
}

function fmtTimestamp(unixSeconds: number): string {
  return new Date(unixSeconds * 1000).toISOString().replace('T', ' ').slice(0, 19);
}

export function sessionListView(slice: ManifestSlice): string {
  if (slice.total === 0) {
    return `<section class="session-list"><p class="empty">No sessions yet.</p></section>`;
  }
  const rows = slice.sessions
    .map(
      (row) =>
        `<tr data-session="${escapeHtml(row.id)}">` +
        `<td><a href="#/session/${encodeURIComponent(row.id)}">${escapeHtml(row.id)}</a></td>` +
        `<td>${fmtTimestamp(row.created_at)}</td>` +
        `<td>${escapeHtml(row.label_summary)}</td>` +
        `<td>${row.num_annotations}</td></tr>`,
    )
    .join('');
  const pages = totalPages(slice.total, slice.page_size);
  const prevDisabled = slice.page <= 1 ? ' disabled' : '';
  const nextDisabled = slice.page >= pages ? ' disabled' : '';
  return (
    `<section class="session-list">` +
    `<table><thead><tr><th>session</th><th>received</th><th>label</th><th>notes</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<nav class="pager">` +
    `<button data-action="prev-page"${prevDisabled}>&#8592;</button>` +
    `<span class="page-indicator">page ${slice.page} of ${pages}</span>` +
    `<button data-action="next-page"${nextDisabled}>&#8594;</button>` +
    `<span class="total">${slice.total} sessions</span>` +
    `</nav></section>`
  );
}

// --- charts -----------------------------------------------------------------

function polylinePoints(samples: number[], width: number, height: number): string {
  if (samples.length === 0) return '';
  let lo = samples[0];
  let hi = samples[0];
  for (const v of samples) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const span = hi - lo || 1;
  const step = Math.max(1, Math.floor(samples.length / 800));
  const pts: string[] = [];
  for (let i = 0; i < samples.length; i += step) {
    const x = (i / (samples.length - 1 || 1)) * width;
    const y = height - ((samples[i] - lo) / span) * height;
    pts.push(`${x.toFixed(1)},${y.toFixed(1)}`);
  }
  return pts.join(' ');
}

export interface PhaseShading {
  phase2: [number, number];
  phase3: [number, number];
  totalSamples: number;
}

export function waveformSvg(
  label: string,
  samples: number[],
  shading: PhaseShading | null = null,
  width = 720,
  height = 60,
): string {
  let shade = '';
  if (shading && shading.totalSamples > 0) {
    const bands: Array<[string, [number, number]]> = [
      ['shade-inflation', shading.phase2],
      ['shade-deflation', shading.phase3],
    ];
    for (const [cls, [s, e]] of bands) {
      if (e > s) {
        const x = (s / shading.totalSamples) * width;
        const w = ((e - s) / shading.totalSamples) * width;
        shade += `<rect class="${cls}" x="${x.toFixed(1)}" y="0" width="${w.toFixed(1)}" height="${height}"></rect>`;
      }
    }
  }
  return (
    `<figure class="waveform" data-channel="${escapeHtml(label)}">` +
    `<figcaption>${escapeHtml(label)}</figcaption>` +
    `<svg viewBox="0 0 ${width} ${height}" preserveAspectRatio="none">${shade}` +
    `<polyline fill="none" stroke="currentColor" points="${polylinePoints(samples, width, height)}"/>` +
    `</svg></figure>`
  );
}

export function barChartSvg(
  title: string,
  labels: string[],
  series: Record<string, number[]>,
  width = 720,
  height = 220,
): string {
  const names = Object.keys(series);
  let top = 0;
  for (const name of names) for (const v of series[name]) if (v > top) top = v;
  if (top <= 0) top = 1;
  const margin = 30;
  const plotW = width - 2 * margin;
  const plotH = height - 2 * margin;
  const groupW = plotW / Math.max(1, labels.length);
  const barW = groupW / (names.length + 1);
  let bars = '';
  labels.forEach((label, gi) => {
    names.forEach((name, si) => {
      const v = series[name][gi] ?? 0;
      const h = (v / top) * plotH;
      const x = margin + gi * groupW + (si + 0.5) * barW;
      const y = height - margin - h;
      bars +=
        `<rect class="series-${si}" x="${x.toFixed(1)}" y="${y.toFixed(1)}" ` +
        `width="${barW.toFixed(1)}" height="${h.toFixed(1)}">` +
        `<title>${escapeHtml(name)} ${escapeHtml(label)}: ${v}</title></rect>`;
    });
    bars += `<text x="${(margin + (gi + 0.5) * groupW).toFixed(1)}" y="${height - 8}" text-anchor="middle">${escapeHtml(label)}</text>`;
  });
  return (
    `<figure class="bar-chart"><figcaption>${escapeHtml(title)}</figcaption>` +
    `<svg viewBox="0 0 ${width} ${height}">${bars}</svg></figure>`
  );
}

export function spatialMapSvg(analysis: AnalysisPayload, width = 360, height = 220): string {
  const map = analysis.spatial_map;
  const coords = map.sensor_xy_mm ?? map.strength.map((_, i) => [i * 8, 0] as [number, number]);
  const xs = coords.map((c) => c[0]);
  const ys = coords.map((c) => c[1]);
  const pad = 30;
  const lo = [Math.min(...xs), Math.min(...ys)];
  const hi = [Math.max(...xs), Math.max(...ys)];
  const spanX = hi[0] - lo[0] || 1;
  const spanY = hi[1] - lo[1] || 1;
  const top = Math.max(...map.strength, 1e-12);
  const dots = coords
    .map((c, i) => {
      const x = pad + ((c[0] - lo[0]) / spanX) * (width - 2 * pad);
      const y = height - pad - ((c[1] - lo[1]) / spanY) * (height - 2 * pad);
      const r = 4 + 14 * Math.sqrt(map.strength[i] / top);
      return (
        `<circle data-sensor="c${i + 1}" cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="${r.toFixed(1)}">` +
        `<title>c${i + 1}: ${map.strength[i]}</title></circle>`
      );
    })
    .join('');
  return (
    `<figure class="spatial-map">` +
    `<figcaption>pulse length ${map.length_mm} mm, width ${map.width_mm} mm</figcaption>` +
    `<svg viewBox="0 0 ${width} ${height}">${dots}</svg></figure>`
  );
}

// --- detail view --------------------------------------------------------------

export function thermalTable(analysis: AnalysisPayload): string {
  const regions = Object.keys(analysis.thermal).sort();
  const blocks = regions
    .map((region) => {
      const entry = analysis.thermal[region];
      const rows = (kind: 'warm_cold' | 'dry_wet') =>
        entry[kind].names
          .map(
            (name, i) =>
              `<tr><td>${escapeHtml(name)}</td><td>${entry[kind].values[i].toFixed(4)}</td></tr>`,
          )
          .join('');
      return (
        `<details class="thermal-region" data-region="${escapeHtml(region)}">` +
        `<summary>${escapeHtml(region)}</summary>` +
        `<div class="thermal-tables">` +
        `<table class="warm-cold"><caption>warm/cold (${entry.warm_cold.values.length})</caption>${rows('warm_cold')}</table>` +
        `<table class="dry-wet"><caption>dry/wet (${entry.dry_wet.values.length})</caption>${rows('dry_wet')}</table>` +
        `</div></details>`
      );
    })
    .join('');
  return `<section class="thermal">${blocks}</section>`;
}

export function annotationList(annotations: Annotation[]): string {
  if (annotations.length === 0) {
    return `<p class="empty" data-role="annotations">No annotations yet.</p>`;
  }
  const items = annotations
    .map((a) => {
      const label = a.temperament
        ? `${a.temperament.warm_axis}/${a.temperament.wet_axis}`
        : '&mdash;';
      return (
        `<li><span class="author">${escapeHtml(a.author)}</span> ` +
        `<time>${fmtTimestamp(a.timestamp)}</time> ` +
        `<span class="label">${label}</span> ${escapeHtml(a.note)}</li>`
      );
    })
    .join('');
  return `<ol class="annotations" data-role="annotations">${items}</ol>`;
}

export function annotationForm(): string {
  const axisOptions = (values: string[]) =>
    values.map((v) => `<option value="${v}">${v}</option>`).join('');
  return (
    `<form data-form="annotation" class="annotation-form">` +
    `<input name="author" placeholder="your name" required/>` +
    `<select name="warm_axis"><option value="">warm axis&hellip;</option>${axisOptions(['warm', 'moderate', 'cold'])}</select>` +
    `<select name="wet_axis"><option value="">wet axis&hellip;</option>${axisOptions(['dry', 'moderate', 'wet'])}</select>` +
    `<textarea name="note" placeholder="note"></textarea>` +
    `<button type="submit">Add annotation</button>` +
    `<span class="form-error" role="status"></span>` +
    `</form>`
  );
}

export function analysisPending(id: string): string {
  return `<p class="pending" data-session="${escapeHtml(id)}">Analyzing session&hellip;</p>`;
}

export function errorPanel(message: string): string {
  return `<div class="banner error" role="alert">${escapeHtml(message)}</div>`;
}

export function sessionDetailView(
  record: SessionRecordPayload,
  analysis: AnalysisPayload,
): string {
  const seg = analysis.phase_segmentation;
  const shading: PhaseShading = {
    phase2: seg.phase2,
    phase3: seg.phase3,
    totalSamples: record.recording.ppg.length,
  };
  const waves =
    record.recording.capacitive
      .map((samples, i) => waveformSvg(`c${i + 1}`, samples, shading))
      .join('') +
    waveformSvg('ppg', record.recording.ppg, shading) +
    waveformSvg('pressure (mmHg)', record.recording.pressure, shading);

  const channels = analysis.channel_strength.map((_, i) => `c${i + 1}`);
  const phaseChart = barChartSvg('Channel power per pressure phase', channels, {
    'no pressure': analysis.phase_power.map((row) => row[0]),
    inflation: analysis.phase_power.map((row) => row[1]),
    deflation: analysis.phase_power.map((row) => row[2]),
  });

  return (
    `<article class="session-detail" data-session="${escapeHtml(record.id)}">` +
    `<header><h2>${escapeHtml(record.id)}</h2>` +
    `<dl class="facts">` +
    `<dt>participant</dt><dd>${escapeHtml(record.participant.pseudo_id)} (${escapeHtml(record.participant.sex)}, ${record.participant.age_years} y)</dd>` +
    `<dt>questionnaire label</dt><dd class="mmq-label">${escapeHtml(analysis.mmq_label.warm_axis)}/${escapeHtml(analysis.mmq_label.wet_axis)}</dd>` +
    `<dt>heart rate</dt><dd class="heart-rate">${analysis.heart_rate_bpm.toFixed(1)} BPM</dd>` +
    `</dl></header>` +
    `<section class="waveforms">${waves}</section>` +
    `<section class="charts">${phaseChart}${spatialMapSvg(analysis)}</section>` +
    thermalTable(analysis) +
    `<section class="annotation-panel">${annotationList(record.annotations)}${annotationForm()}</section>` +
    `</article>`
  );
}
