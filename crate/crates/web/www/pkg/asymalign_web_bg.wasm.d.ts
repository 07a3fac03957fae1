/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_displacementcurve_free: (a: number, b: number) => void;
export const __wbg_get_displacementcurve_kl: (a: number) => [number, number];
export const __wbg_get_displacementcurve_saot: (a: number) => [number, number];
export const __wbg_get_displacementcurve_shift: (a: number) => [number, number];
export const __wbg_get_simulation_event_count: (a: number) => number;
export const __wbg_get_simulation_events: (a: number) => [number, number];
export const __wbg_get_simulation_height: (a: number) => number;
export const __wbg_get_simulation_r_event: (a: number) => number;
export const __wbg_get_simulation_rgb: (a: number) => [number, number];
export const __wbg_get_simulation_width: (a: number) => number;
export const __wbg_get_transport_converged: (a: number) => number;
export const __wbg_get_transport_cost: (a: number) => number;
export const __wbg_get_transport_exact_cost: (a: number) => number;
export const __wbg_get_transport_grid: (a: number) => number;
export const __wbg_get_transport_iterations: (a: number) => number;
export const __wbg_get_transport_marginal_err: (a: number) => number;
export const __wbg_get_transport_p: (a: number) => [number, number];
export const __wbg_get_transport_plan: (a: number) => [number, number];
export const __wbg_get_transport_q: (a: number) => [number, number];
export const __wbg_set_displacementcurve_kl: (a: number, b: number, c: number) => void;
export const __wbg_set_displacementcurve_saot: (a: number, b: number, c: number) => void;
export const __wbg_set_displacementcurve_shift: (a: number, b: number, c: number) => void;
export const __wbg_set_simulation_event_count: (a: number, b: number) => void;
export const __wbg_set_simulation_events: (a: number, b: number, c: number) => void;
export const __wbg_set_simulation_height: (a: number, b: number) => void;
export const __wbg_set_simulation_r_event: (a: number, b: number) => void;
export const __wbg_set_simulation_rgb: (a: number, b: number, c: number) => void;
export const __wbg_set_simulation_width: (a: number, b: number) => void;
export const __wbg_set_transport_converged: (a: number, b: number) => void;
export const __wbg_set_transport_cost: (a: number, b: number) => void;
export const __wbg_set_transport_exact_cost: (a: number, b: number) => void;
export const __wbg_set_transport_grid: (a: number, b: number) => void;
export const __wbg_set_transport_iterations: (a: number, b: number) => void;
export const __wbg_set_transport_marginal_err: (a: number, b: number) => void;
export const __wbg_set_transport_p: (a: number, b: number, c: number) => void;
export const __wbg_set_transport_plan: (a: number, b: number, c: number) => void;
export const __wbg_set_transport_q: (a: number, b: number, c: number) => void;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const __wbg_transport_free: (a: number, b: number) => void;
export const displacementCurve: (a: number, b: number, c: number, d: number) => [number, number, number];
export const simulate: (a: number, b: number, c: number) => [number, number, number];
export const transport: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
