import init, { presets, entropyBytes, exchange, failureBound, security } from './pkg/e8kem_demo.js';

const ready = init();

const ops = {
  presets: () => presets(),
  exchange: ({ preset }) => {
    const x = exchange(preset, crypto.getRandomValues(new Uint8Array(entropyBytes())));
    return {
      serverKey: x.server_key,
      clientKey: x.client_key,
      msg1Hex: x.msg1_hex,
      msg2Hex: x.msg2_hex,
      msg1Bytes: x.msg1_bytes,
      msg2Bytes: x.msg2_bytes,
    };
  },
  failureBound: ({ preset }) => {
    const b = failureBound(preset);
    return { log2Pe: b.log2_pe, classes: b.classes };
  },
  security: ({ preset }) => {
    const s = security(preset);
    return { primal: s.primal, dual: s.dual, classical: s.classical, quantum: s.quantum, plausible: s.plausible };
  },
};

self.onmessage = async ({ data }) => {
  await ready;
  const started = performance.now();
  try {
    self.postMessage({ id: data.id, ok: ops[data.op](data), ms: performance.now() - started });
  } catch (e) {
    self.postMessage({ id: data.id, err: String(e.message ?? e) });
  }
};
