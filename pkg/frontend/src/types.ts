/** Wire types mirroring the catalog service's JSON responses. */

import type { Layer, Mode } from './query.js';

export interface RecordSummary {
  wsi_id: string;
  case_id: string;
  organ_codes: string[];
  map_ref: string;
  ingested_at: string;
  profile_hashes: Record<string, string>;
}

export interface SearchResponse {
  query: string;
  count: number;
  records: RecordSummary[];
}

/** One layer/mode composition vector, ratios and counts keyed by class code. */
export interface CompositionVector {
  layer: Layer;
  mode: Mode;
  ratios: Record<string, number>;
  pixel_counts: Record<string, number>;
  specimen_pixels: number;
  total_pixels: number;
  profile_hash: string;
}

export interface CompositionDoc {
  wsi_id: string;
  profile_hashes: Record<string, string>;
  compositions: Partial<Record<Layer, Partial<Record<Mode, CompositionVector>>>>;
}

export interface ProfileEntry {
  id: number;
  parentId: number;
  code: string;
  color: string;
  name: string;
}
