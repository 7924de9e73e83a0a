/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_draws_free: (a: number, b: number) => void;
export const __wbg_enhancement_free: (a: number, b: number) => void;
export const draws_acceptance: (a: number) => number;
export const draws_points: (a: number) => [number, number];
export const enhance_synthetic: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const enhancement_bins: (a: number) => number;
export const enhancement_clean_db: (a: number) => [number, number];
export const enhancement_enhanced_db: (a: number) => [number, number];
export const enhancement_frames: (a: number) => number;
export const enhancement_noisy_db: (a: number) => [number, number];
export const enhancement_si_sdr_out: (a: number) => number;
export const enhancement_trace: (a: number) => [number, number];
export const sample_gaussian: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const enhancement_si_sdr_in: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
