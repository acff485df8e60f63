/* tslint:disable */
/* eslint-disable */

/**
 * Phase I on `n1` in-control draws, then Phase II on `n2` draws whose
 * first coordinate moves by `shift_sd` standard deviations from index
 * `shift_at` on.
 */
export function ewma_demo(n1: number, n2: number, shift_sd: number, shift_at: number, lambda: number, c: number, seed: number): string;

/**
 * LBF histograms for the four scenarios on a shared bin grid.
 */
export function lbf_histograms(delta: number, n: number, bins: number, seed: number): string;

/**
 * `P_t` paths from `p0` for each discount factor, with their limits.
 */
export function p_convergence(deltas: Float64Array, p0: number, steps: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ewma_demo: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly lbf_histograms: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly p_convergence: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
