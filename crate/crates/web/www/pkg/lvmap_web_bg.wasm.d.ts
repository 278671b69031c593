/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const ncut_demo: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const ray_profile: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const sparsify: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
