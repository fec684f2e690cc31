/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_profile_free: (a: number, b: number) => void;
export const efficiency_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const loglik_profile: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint, h: number) => [number, number, number];
export const profile_alpha_hat: (a: number) => number;
export const profile_alphas: (a: number) => [number, number];
export const profile_values: (a: number) => [number, number];
export const sample_scatter: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
