/* tslint:disable */
/* eslint-disable */

/**
 * Metrics of all four protocols on the same deployment.
 */
export function compareProtocols(deployment: string, images: number): string;

/**
 * Deployment JSON for `kind` = plain | holes | grid, resampled until the
 * source reaches the sink.
 */
export function generateTopology(kind: string, n: number, holes: number, seed: number): string;

/**
 * Runs `protocol` on a deployment; returns metrics, residual energies, used
 * links, blocked nodes and TPGF paths.
 */
export function runProtocol(deployment: string, protocol: string, images: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compareProtocols: (a: number, b: number, c: number) => [number, number, number, number];
    readonly generateTopology: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly runProtocol: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
