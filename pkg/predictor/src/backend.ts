/**
 * WASM backend bootstrap.
 *
 * The wasm backend ships inference kernels: Conv2DBackpropFilter is
 * missing entirely and Conv2DBackpropInput is present but slow. For the
 * stride-1 NHWC convolutions this model uses, both gradients are
 * expressible through the fast forward conv2d path (XNNPACK), so shim
 * kernels are registered at startup:
 *
 *   dW[kh,kw,ci,co] = conv over batch of x (channels as batch) with dy as
 *                     the filter (batch as input channels);
 *   dX = conv2d(dy, filter flipped spatially with in/out channels swapped).
 *
 * Falls back to the plain JS backend when the wasm binary cannot load.
 */

import * as path from 'path';
import * as tf from '@tensorflow/tfjs';
import { setWasmPaths } from '@tensorflow/tfjs-backend-wasm';

let ready: Promise<string> | null = null;

interface ConvGradAttrs {
  strides: number | [number, number];
  pad: 'same' | 'valid' | number;
  dataFormat: string;
}

function samePad(pad: ConvGradAttrs['pad'], kh: number, kw: number,
                 shim: string): [number, number] {
  let ph: number;
  let pw: number;
  if (pad === 'same') {
    ph = (kh - 1) / 2;
    pw = (kw - 1) / 2;
  } else if (pad === 'valid') {
    ph = 0;
    pw = 0;
  } else {
    throw new Error(`${shim}: unsupported pad ${JSON.stringify(pad)}`);
  }
  if (!Number.isInteger(ph) || !Number.isInteger(pw)) {
    throw new Error(`${shim} supports odd kernels only`);
  }
  return [ph, pw];
}

function checkStrideFormat(attrs: ConvGradAttrs, shim: string): void {
  const s = Array.isArray(attrs.strides) ? attrs.strides
    : [attrs.strides, attrs.strides];
  if (s[0] !== 1 || s[1] !== 1) {
    throw new Error(`${shim} supports stride 1 only`);
  }
  if (attrs.dataFormat !== 'NHWC') {
    throw new Error(`${shim} supports NHWC only`);
  }
}

function registerConvGradShims(): void {
  tf.registerKernel({
    kernelName: 'Conv2DBackpropFilter',
    backendName: 'wasm',
    kernelFunc: ({ inputs, attrs }) => {
      const { x, dy } = inputs as { x: tf.Tensor4D; dy: tf.Tensor4D };
      const a = attrs as unknown as ConvGradAttrs & {
        filterShape: [number, number, number, number];
      };
      checkStrideFormat(a, 'conv filter-grad shim');
      const [kh, kw] = a.filterShape;
      const [ph, pw] = samePad(a.pad, kh, kw, 'conv filter-grad shim');
      const xT = tf.transpose(x, [3, 1, 2, 0]);
      const dyT = tf.transpose(dy, [1, 2, 0, 3]);
      const convT = tf.conv2d(xT as tf.Tensor4D, dyT as tf.Tensor4D, 1,
                              [[0, 0], [ph, ph], [pw, pw], [0, 0]]);
      const dw = tf.transpose(convT, [1, 2, 0, 3]);
      xT.dispose();
      dyT.dispose();
      convT.dispose();
      return dw;
    },
  });

  tf.unregisterKernel('Conv2DBackpropInput', 'wasm');
  tf.registerKernel({
    kernelName: 'Conv2DBackpropInput',
    backendName: 'wasm',
    kernelFunc: ({ inputs, attrs }) => {
      const { dy, filter } = inputs as { dy: tf.Tensor4D; filter: tf.Tensor4D };
      const a = attrs as unknown as ConvGradAttrs;
      checkStrideFormat(a, 'conv input-grad shim');
      const [kh, kw] = filter.shape;
      const [ph, pw] = samePad(a.pad, kh, kw, 'conv input-grad shim');
      if (a.pad === 'valid') {
        // full correlation needs (k - 1) padding on each side
        return tf.tidy(() => {
          const flipT = tf.transpose(tf.reverse(filter, [0, 1]), [0, 1, 3, 2]);
          return tf.conv2d(dy, flipT as tf.Tensor4D, 1,
                           [[0, 0], [kh - 1, kh - 1], [kw - 1, kw - 1], [0, 0]]);
        });
      }
      const flip = tf.reverse(filter, [0, 1]);
      const flipT = tf.transpose(flip, [0, 1, 3, 2]);
      const dx = tf.conv2d(dy, flipT as tf.Tensor4D, 1,
                           [[0, 0], [ph, ph], [pw, pw], [0, 0]]);
      flip.dispose();
      flipT.dispose();
      return dx;
    },
  });
}

export function initBackend(): Promise<string> {
  if (ready === null) {
    ready = (async () => {
      try {
        const pkg = require.resolve('@tensorflow/tfjs-backend-wasm');
        setWasmPaths(path.join(path.dirname(pkg), path.sep));
        await tf.setBackend('wasm');
        await tf.ready();
        registerConvGradShims();
      } catch {
        await tf.setBackend('cpu');
        await tf.ready();
      }
      return tf.getBackend();
    })();
  }
  return ready;
}
