// In-process fixture of the telecare service for contract tests: same
// routes, same payload shapes, canned data for 34 sessions.

import { createServer, type Server } from 'node:http';
import type { AddressInfo } from 'node:net';
import type {
  AnalysisPayload,
  Annotation,
  ManifestRow,
  SessionRecordPayload,
} from '../src/types.js';

const WARM = ['warm', 'moderate', 'cold'] as const;
const WET = ['dry', 'moderate', 'wet'] as const;

export function makeManifestRows(n = 34): ManifestRow[] {
  const rows: ManifestRow[] = [];
  for (let i = 0; i < n; i++) {
    rows.push({
      id: `sess-0042-${String(i).padStart(3, '0')}`,
      created_at: 1_700_000_000 + i,
      label_summary: `${WARM[i % 3]}/${WET[i % 3]}`,
      num_annotations: 0,
    });
  }
  // newest first, as the real service sorts
  return rows.sort((a, b) => b.created_at - a.created_at || (a.id < b.id ? -1 : 1));
}

function rampSamples(n: number, scale: number): number[] {
  const out: number[] = [];
  for (let i = 0; i < n; i++) out.push(Math.sin((2 * Math.PI * 1.2 * i) / 200) * scale);
  return out;
}

export function makeRecordPayload(id: string): SessionRecordPayload {
  const n = 400;
  return {
    id,
    created_at: 1_700_000_000,
    participant: { pseudo_id: 'p000', age_years: 41.5, sex: 'F' },
    mmq: {
      responses: { warm_q1: 0.9, wet_q1: 0.2 },
      label: { warm_axis: 'warm', wet_axis: 'dry' },
      schema_version: 'v1',
    },
    recording: {
      rate_hz: 200,
      capacitive: Array.from({ length: 7 }, (_, i) => rampSamples(n, 1 + i * 0.1)),
      ppg: rampSamples(n, 2),
      pressure: Array.from({ length: n }, (_, i) => (i < 100 ? 0 : Math.min(160, i - 100))),
      spec: {
        rate_hz: 200,
        lowpass_cutoff_hz: 20,
        duration_s: 2,
        pressure_range_mmhg: [0, 180],
      },
    },
    thermal: [
      {
        roi: { region_kind: 'wrist_malmas', rect: [0, 0, 32, 32] },
        frames: [
          { width: 2, height: 2, temps_c: [31, 31, 31, 31], captured_at_s: 0 },
        ],
      },
    ],
    annotations: [],
    analysis: null,
    ground_truth: null,
  };
}

export function makeAnalysisPayload(): AnalysisPayload {
  return {
    heart_rate_bpm: 72.2,
    channel_strength: [1, 2, 3, 4, 3, 2, 1],
    lag_s: [0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04],
    lag_confidence: [0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9],
    phase_power: Array.from({ length: 7 }, (_, i) => [1 + i, 2 + i, 0.5 + i]),
    power_timeline: Array.from({ length: 7 }, () => [
      { t_s: 2.5, strength: 1.5 },
      { t_s: 5.0, strength: 1.7 },
    ]),
    spatial_map: {
      length_mm: 24,
      width_mm: 16,
      strength: [1, 2, 3, 4, 3, 2, 1],
      sensor_xy_mm: [
        [-16, 0],
        [-8, 0],
        [0, 0],
        [8, 0],
        [16, 0],
        [0, 8],
        [0, -8],
      ],
    },
    phase_segmentation: { phase1: [0, 100], phase2: [100, 260], phase3: [260, 400] },
    thermal: {
      wrist_malmas: {
        warm_cold: {
          names: [
            'mean', 'median', 'std', 'min', 'max', 'range', 'p10', 'p90',
            'iqr', 'skewness', 'kurtosis', 'temporal_std', 'temporal_slope',
          ],
          values: [32.5, 32.4, 0.6, 30.9, 34.0, 3.1, 31.7, 33.3, 0.8, 0.1, -0.2, 0, 0],
          single_frame: true,
        },
        dry_wet: {
          names: [
            'gradient_mean', 'gradient_std', 'entropy', 'uniformity',
            'glcm_contrast', 'glcm_homogeneity', 'coeff_variation',
            'mode_concentration', 'hot_region_count', 'edge_density',
            'lr_asymmetry', 'smoothness',
          ],
          values: [0.5, 0.2, 2.8, 0.2, 12.0, 0.5, 0.02, 0.6, 3, 0.4, 0.1, 0.26],
        },
      },
    },
    mmq_label: { warm_axis: 'warm', wet_axis: 'dry' },
  };
}

export interface Fixture {
  server: Server;
  baseUrl: string;
  annotations: Map<string, Annotation[]>;
  close(): Promise<void>;
}

export function startFixture(options: { n?: number; token?: string } = {}): Promise<Fixture> {
  const rows = makeManifestRows(options.n ?? 34);
  const annotations = new Map<string, Annotation[]>();

  const server = createServer((req, res) => {
    const url = new URL(req.url ?? '/', 'http://fixture');
    const send = (status: number, body: unknown) => {
      res.writeHead(status, { 'Content-Type': 'application/json' });
      res.end(JSON.stringify(body));
    };

    if (url.pathname === '/api/v1/health') {
      send(200, { status: 'ok', version: 'fixture' });
      return;
    }
    if (options.token) {
      if (req.headers.authorization !== `Bearer ${options.token}`) {
        send(401, { detail: 'missing or invalid bearer token' });
        return;
      }
    }

    if (url.pathname === '/api/v1/sessions' && req.method === 'GET') {
      const page = Number(url.searchParams.get('page') ?? '1');
      const pageSize = Number(url.searchParams.get('page_size') ?? '10');
      const start = (page - 1) * pageSize;
      send(200, {
        version: '1',
        total: rows.length,
        page,
        page_size: pageSize,
        sessions: rows.slice(start, start + pageSize).map((row) => ({
          ...row,
          num_annotations: (annotations.get(row.id) ?? []).length,
        })),
      });
      return;
    }

    const detail = url.pathname.match(/^\/api\/v1\/sessions\/([^/]+)$/);
    if (detail && req.method === 'GET') {
      const id = decodeURIComponent(detail[1]);
      if (!rows.some((r) => r.id === id)) {
        send(404, { detail: `NotFound: session ${id}` });
        return;
      }
      const record = makeRecordPayload(id);
      record.annotations = annotations.get(id) ?? [];
      send(200, record);
      return;
    }

    const analysis = url.pathname.match(/^\/api\/v1\/sessions\/([^/]+)\/analysis$/);
    if (analysis && req.method === 'GET') {
      const id = decodeURIComponent(analysis[1]);
      if (!rows.some((r) => r.id === id)) {
        send(404, { detail: `NotFound: session ${id}` });
        return;
      }
      send(200, makeAnalysisPayload());
      return;
    }

    const annotate = url.pathname.match(/^\/api\/v1\/sessions\/([^/]+)\/annotations$/);
    if (annotate && req.method === 'POST') {
      const id = decodeURIComponent(annotate[1]);
      if (!rows.some((r) => r.id === id)) {
        send(404, { detail: `NotFound: session ${id}` });
        return;
      }
      let raw = '';
      req.on('data', (chunk) => (raw += chunk));
      req.on('end', () => {
        const body = JSON.parse(raw || '{}');
        const author = String(body.author ?? '').trim();
        const note = String(body.note ?? '');
        if (!author || (body.temperament == null && !note.trim())) {
          send(400, { detail: 'EmptyAnnotation: annotation needs an author and a temperament or note' });
          return;
        }
        const list = annotations.get(id) ?? [];
        list.push({
          author,
          timestamp: 1_700_000_100 + list.length,
          temperament: body.temperament ?? null,
          note,
        });
        annotations.set(id, list);
        send(201, { annotations: list });
      });
      return;
    }

    send(404, { detail: 'no such route' });
  });

  return new Promise((resolve) => {
    server.listen(0, '127.0.0.1', () => {
      const { port } = server.address() as AddressInfo;
      resolve({
        server,
        baseUrl: `http://127.0.0.1:${port}`,
        annotations,
        close: () =>
          new Promise<void>((done) => {
            server.close(() => done());
          }),
      });
    });
  });
}
