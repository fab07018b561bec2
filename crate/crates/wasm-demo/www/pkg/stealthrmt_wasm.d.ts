/* tslint:disable */
/* eslint-disable */

export class Grid {
    free(): void;
    [Symbol.dispose](): void;
    ergodicCurve(betas: Float64Array): Float64Array;
    measurements(): number;
    /**
     * `[mean, std error]` of the per-state cost over `trials` draws.
     */
    monteCarlo(beta: number, trials: number, seed: bigint): Float64Array;
    /**
     * `case` is `ieee30` or `ieee118`.
     */
    constructor(_case: string, r: number, snr_db: number);
    /**
     * Perfect-knowledge cost per state.
     */
    perfectCost(): number;
    states(): number;
    /**
     * Flattened `[lower, upper, gap cap]` triples.
     */
    varianceBounds(betas: Float64Array, variant: string): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_grid_free: (a: number, b: number) => void;
    readonly grid_ergodicCurve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly grid_measurements: (a: number) => number;
    readonly grid_monteCarlo: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly grid_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly grid_perfectCost: (a: number) => number;
    readonly grid_states: (a: number) => number;
    readonly grid_varianceBounds: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
