// Wire-format types of the telecare HTTP API. The console renders these
// payloads verbatim: every number on screen traces back to an API field.

export interface TemperamentLabel {
  warm_axis: 'warm' | 'moderate' | 'cold';
  wet_axis: 'dry' | 'moderate' | 'wet';
}

export interface ManifestRow {
  id: string;
  created_at: number;
  label_summary: string;
  num_annotations: number;
}

export interface ManifestSlice {
  version: string;
  total: number;
  page: number;
  page_size: number;
  sessions: ManifestRow[];
}

export interface Participant {
  pseudo_id: string;
  age_years: number;
  sex: string;
}

export interface RecordingPayload {
  rate_hz: number;
  capacitive: number[][];
  ppg: number[];
  pressure: number[];
  spec: {
    rate_hz: number;
    lowpass_cutoff_hz: number;
    duration_s: number;
    pressure_range_mmhg: [number, number];
  };
}

export interface Annotation {
  author: string;
  timestamp: number;
  temperament: TemperamentLabel | null;
  note: string;
}

export interface SessionRecordPayload {
  id: string;
  created_at: number;
  participant: Participant;
  mmq: {
    responses: Record<string, number>;
    label: TemperamentLabel;
    schema_version: string;
  };
  recording: RecordingPayload;
  thermal: Array<{
    roi: { region_kind: string; rect: [number, number, number, number] };
    frames: Array<{
      width: number;
      height: number;
      temps_c: number[];
      captured_at_s: number;
    }>;
  }>;
  annotations: Annotation[];
  analysis: AnalysisPayload | null;
  ground_truth: unknown;
}

export interface FeatureBlock {
  names: string[];
  values: number[];
  single_frame?: boolean;
}

export interface AnalysisPayload {
  heart_rate_bpm: number;
  channel_strength: number[];
  lag_s: number[];
  lag_confidence?: number[];
  phase_power: number[][]; // [channel][phase]
  power_timeline: Array<Array<{ t_s: number; strength: number }>>;
  spatial_map: {
    length_mm: number;
    width_mm: number;
    strength: number[];
    sensor_xy_mm?: Array<[number, number]>;
  };
  phase_segmentation: {
    phase1: [number, number];
    phase2: [number, number];
    phase3: [number, number];
  };
  thermal: Record<string, { warm_cold: FeatureBlock; dry_wet: FeatureBlock }>;
  mmq_label: TemperamentLabel;
}

export interface AnnotationDraft {
  author: string;
  temperament: TemperamentLabel | null;
  note: string;
}
