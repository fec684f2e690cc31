/* tslint:disable */
/* eslint-disable */

/**
 * Objective values over an α grid for one dataset.
 */
export class Profile {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Grid point with the largest value.
     */
    readonly alpha_hat: number;
    readonly alphas: Float64Array;
    /**
     * Log-likelihood minus its grid maximum; `-Infinity` where undefined.
     */
    readonly values: Float64Array;
}

/**
 * Root relative efficiencies (%) of `Max1`, `Max2` and `Thr5` against
 * `Thr4`, by quadrature, at `points` values of α in [0.1, 0.9]. Returned
 * as rows `alpha, max1, max2, thr5` flattened; `thr5` is NaN where the
 * threshold is too low for it.
 */
export function efficiency_curve(block_length: number, p: number, points: number): Float64Array;

/**
 * Profile `estimator` on `n` exact logistic observations in dimension
 * `dim` with known unit Fréchet margins. `tuning` is the block length for
 * block-maximum estimators and the threshold probability otherwise.
 */
export function loglik_profile(estimator: string, alpha: number, n: number, dim: number, tuning: number, seed: bigint, grid_points: number): Profile;

/**
 * `n` bivariate points on the uniform scale, interleaved as `u1, v1, u2, v2, ...`.
 * `model` is `logistic` or `opclayton`.
 */
export function sample_scatter(model: string, alpha: number, n: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_profile_free: (a: number, b: number) => void;
    readonly efficiency_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly loglik_profile: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint, h: number) => [number, number, number];
    readonly profile_alpha_hat: (a: number) => number;
    readonly profile_alphas: (a: number) => [number, number];
    readonly profile_values: (a: number) => [number, number];
    readonly sample_scatter: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
