/* tslint:disable */
/* eslint-disable */

export class Draws {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Mean acceptance rate; 1 for Langevin.
     */
    readonly acceptance: number;
    /**
     * Interleaved `x0, y0, x1, y1, ..`.
     */
    readonly points: Float64Array;
}

export class Enhancement {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly bins: number;
    /**
     * Row-major frames × bins power in dB.
     */
    readonly clean_db: Float32Array;
    readonly enhanced_db: Float32Array;
    readonly frames: number;
    readonly noisy_db: Float32Array;
    readonly si_sdr_in: number;
    readonly si_sdr_out: number;
    readonly trace: Float64Array;
}

/**
 * Generates a toy mixture at `snr_db` and enhances it with MCEM.
 */
export function enhance_synthetic(sampler: string, iterations: number, snr_db: number, seed: number): Enhancement;

/**
 * Runs one chain on a unit-variance 2-D Gaussian with correlation `rho`.
 */
export function sample_gaussian(sampler: string, steps: number, step_size: number, rho: number, seed: number): Draws;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_draws_free: (a: number, b: number) => void;
    readonly __wbg_enhancement_free: (a: number, b: number) => void;
    readonly draws_acceptance: (a: number) => number;
    readonly draws_points: (a: number) => [number, number];
    readonly enhance_synthetic: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly enhancement_bins: (a: number) => number;
    readonly enhancement_clean_db: (a: number) => [number, number];
    readonly enhancement_enhanced_db: (a: number) => [number, number];
    readonly enhancement_frames: (a: number) => number;
    readonly enhancement_noisy_db: (a: number) => [number, number];
    readonly enhancement_si_sdr_out: (a: number) => number;
    readonly enhancement_trace: (a: number) => [number, number];
    readonly sample_gaussian: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly enhancement_si_sdr_in: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
