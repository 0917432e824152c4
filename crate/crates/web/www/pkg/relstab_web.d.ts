/* tslint:disable */
/* eslint-disable */

/**
 * Normalized CV errors `√N (R̂ₙ − Rₙ)/σ` and `/σ̂ₙ` over `reps` datasets.
 */
export function clt_samples(scenario: string, mode: string, n: number, reps: number, m: number, seed: bigint): string;

/**
 * Soft-thresholding and Lasso coefficient paths on one dataset of size `n`
 * from the scenario's model, over `points` log-spaced penalties up to `λ_max`.
 */
export function coefficient_paths(scenario: string, n: number, points: number, seed: bigint): string;

/**
 * `σ²`, `γ` and `r` on a grid of training sizes with `m` Monte-Carlo
 * replications each. `n_grid` is comma-separated.
 */
export function stability_rates(scenario: string, mode: string, n_grid: string, m: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly clt_samples: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint) => [number, number, number, number];
    readonly coefficient_paths: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly stability_rates: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
