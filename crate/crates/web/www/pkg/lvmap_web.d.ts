/* tslint:disable */
/* eslint-disable */

/**
 * Two cliques of `n_a` and `n_b` images with intra-cluster weights in
 * `[10, 20)` and a fraction `bridge` of cross pairs joined with weight
 * `cross` ∈ (0, 20].
 *
 * Returns `[ncut, planted_ncut, label_0.., planted_0.., then (i, j, w) per edge]`.
 */
export function ncut_demo(n_a: number, n_b: number, bridge: number, cross: number, seed: bigint): Float64Array;

/**
 * Composites a Gaussian density bump `peak·exp(−(t − centre)²/(2·width²))`
 * sampled at `n` bin midpoints.
 *
 * Returns `[depth, opacity, kl_loss, t_0.., σ_0.., w_0.., target_0..]`,
 * where the target is the normalised window of width `sigma_hat` around
 * `lidar_depth` that the depth loss pulls the weights towards.
 */
export function ray_profile(peak: number, centre: number, width: number, lidar_depth: number, sigma_hat: number, n: number): Float64Array;

/**
 * Sparsification of `n` synthetic points whose uncertainty is
 * `correlation·error + (1 − correlation)·noise`.
 *
 * Returns `[ause, random_ause, curve.., oracle.., random_curve..]`, each
 * curve `n_bins` long.
 */
export function sparsify(n: number, correlation: number, n_bins: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ncut_demo: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly ray_profile: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly sparsify: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
