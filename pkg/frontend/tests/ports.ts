/** Fixed ports for the two engine instances started by the global setup. */
export const RECORD_PORT = 38471;
export const REPLAY_PORT = 38472;
export const RECORD_URL = `http://127.0.0.1:${RECORD_PORT}`;
export const REPLAY_URL = `http://127.0.0.1:${REPLAY_PORT}`;
