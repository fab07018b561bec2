/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_grid_free: (a: number, b: number) => void;
export const grid_ergodicCurve: (a: number, b: number, c: number) => [number, number, number, number];
export const grid_measurements: (a: number) => number;
export const grid_monteCarlo: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const grid_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const grid_perfectCost: (a: number) => number;
export const grid_states: (a: number) => number;
export const grid_varianceBounds: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
