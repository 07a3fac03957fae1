/* tslint:disable */
/* eslint-disable */

export class DisplacementCurve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    kl: Float64Array;
    saot: Float64Array;
    shift: Float64Array;
}

export class Simulation {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    event_count: number;
    /**
     * Signed event counts over the exposure window.
     */
    events: Float64Array;
    height: number;
    r_event: number;
    /**
     * Integrated intensity scaled to `[0, 1]`.
     */
    rgb: Float64Array;
    width: number;
}

export class Transport {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    converged: boolean;
    cost: number;
    /**
     * NaN when the grid is too large for the exact solver.
     */
    exact_cost: number;
    grid: number;
    iterations: number;
    marginal_err: number;
    p: Float64Array;
    /**
     * `n × n`, row-major.
     */
    plan: Float64Array;
    q: Float64Array;
}

export function displacementCurve(grid: number, max_shift: number, height: number, epsilon: number): DisplacementCurve;

export function simulate(velocity_px_s: number, exposure_us: number, threshold: number): Simulation;

export function transport(grid: number, shift: number, sigma: number, epsilon: number, log_domain: boolean): Transport;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_displacementcurve_free: (a: number, b: number) => void;
    readonly __wbg_get_displacementcurve_kl: (a: number) => [number, number];
    readonly __wbg_get_displacementcurve_saot: (a: number) => [number, number];
    readonly __wbg_get_displacementcurve_shift: (a: number) => [number, number];
    readonly __wbg_get_simulation_event_count: (a: number) => number;
    readonly __wbg_get_simulation_events: (a: number) => [number, number];
    readonly __wbg_get_simulation_height: (a: number) => number;
    readonly __wbg_get_simulation_r_event: (a: number) => number;
    readonly __wbg_get_simulation_rgb: (a: number) => [number, number];
    readonly __wbg_get_simulation_width: (a: number) => number;
    readonly __wbg_get_transport_converged: (a: number) => number;
    readonly __wbg_get_transport_cost: (a: number) => number;
    readonly __wbg_get_transport_exact_cost: (a: number) => number;
    readonly __wbg_get_transport_grid: (a: number) => number;
    readonly __wbg_get_transport_iterations: (a: number) => number;
    readonly __wbg_get_transport_marginal_err: (a: number) => number;
    readonly __wbg_get_transport_p: (a: number) => [number, number];
    readonly __wbg_get_transport_plan: (a: number) => [number, number];
    readonly __wbg_get_transport_q: (a: number) => [number, number];
    readonly __wbg_set_displacementcurve_kl: (a: number, b: number, c: number) => void;
    readonly __wbg_set_displacementcurve_saot: (a: number, b: number, c: number) => void;
    readonly __wbg_set_displacementcurve_shift: (a: number, b: number, c: number) => void;
    readonly __wbg_set_simulation_event_count: (a: number, b: number) => void;
    readonly __wbg_set_simulation_events: (a: number, b: number, c: number) => void;
    readonly __wbg_set_simulation_height: (a: number, b: number) => void;
    readonly __wbg_set_simulation_r_event: (a: number, b: number) => void;
    readonly __wbg_set_simulation_rgb: (a: number, b: number, c: number) => void;
    readonly __wbg_set_simulation_width: (a: number, b: number) => void;
    readonly __wbg_set_transport_converged: (a: number, b: number) => void;
    readonly __wbg_set_transport_cost: (a: number, b: number) => void;
    readonly __wbg_set_transport_exact_cost: (a: number, b: number) => void;
    readonly __wbg_set_transport_grid: (a: number, b: number) => void;
    readonly __wbg_set_transport_iterations: (a: number, b: number) => void;
    readonly __wbg_set_transport_marginal_err: (a: number, b: number) => void;
    readonly __wbg_set_transport_p: (a: number, b: number, c: number) => void;
    readonly __wbg_set_transport_plan: (a: number, b: number, c: number) => void;
    readonly __wbg_set_transport_q: (a: number, b: number, c: number) => void;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly __wbg_transport_free: (a: number, b: number) => void;
    readonly displacementCurve: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly simulate: (a: number, b: number, c: number) => [number, number, number];
    readonly transport: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
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
