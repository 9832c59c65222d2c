import * as tf from '@tensorflow/tfjs';

/** Raised when a model cannot be represented as a plain dense stack. */
export class ExportError extends Error {}

// TF.js activation identifiers -> weight-document names.  Only activations
// with a bit-compatible counterpart are allowed; notably gelu_new (the tanh
// approximation) is rejected because it is not the erf-based gelu.
const ACTIVATION_MAP: Record<string, string> = {
  relu: 'relu',
  gelu: 'gelu',
  swish: 'silu',
  tanh: 'tanh',
  linear: 'identity',
};

export interface ExportedLayer {
  weights: number[][]; // one row per output neuron
  bias: number[];
  activation: string;
}

export interface WeightDocument {
  input_dim: number;
  layers: ExportedLayer[];
}

function activationName(layer: tf.layers.Layer): string {
  const raw = (layer.getConfig() as { activation?: unknown }).activation;
  // Dense serializes its activation as a plain identifier; custom activation
  // objects come out as {class_name: ...} and are not portable.
  if (typeof raw === 'string') {
    return raw;
  }
  if (raw && typeof raw === 'object' && 'class_name' in raw) {
    return String((raw as { class_name: unknown }).class_name);
  }
  return 'linear';
}

function convertDense(layer: tf.layers.Layer): ExportedLayer {
  const name = activationName(layer);
  const mapped = ACTIVATION_MAP[name];
  if (mapped === undefined) {
    throw new ExportError(
      `layer '${layer.name}': unsupported activation '${name}' ` +
        `(supported: ${Object.keys(ACTIVATION_MAP).join(', ')})`,
    );
  }
  const tensors = layer.getWeights();
  const kernel = tensors[0] as tf.Tensor2D; // [inputDim, units]
  const units = kernel.shape[1];
  // Canonical layout is rows = output neurons, so the kernel is transposed.
  const weights = kernel.transpose().arraySync() as number[][];
  const bias =
    tensors.length > 1
      ? (Array.from(tensors[1].dataSync()) as number[])
      : new Array<number>(units).fill(0);
  return { weights, bias, activation: mapped };
}

/**
 * Convert a TF.js layers model into the portable weight document.
 *
 * Only stacks of dense layers survive the conversion; any other layer kind
 * aborts with the offending layer named.  InputLayer entries carry no
 * weights and are skipped.
 */
export function exportModel(model: tf.LayersModel): WeightDocument {
  const layers: ExportedLayer[] = [];
  let inputDim = -1;
  for (const layer of model.layers) {
    const kind = layer.getClassName();
    if (kind === 'InputLayer') {
      continue;
    }
    if (kind !== 'Dense') {
      throw new ExportError(`layer '${layer.name}': unsupported type '${kind}', only Dense is exportable`);
    }
    const converted = convertDense(layer);
    if (inputDim < 0) {
      inputDim = converted.weights[0].length;
    }
    layers.push(converted);
  }
  if (layers.length === 0) {
    throw new ExportError('model has no dense layers, nothing to export');
  }
  return { input_dim: inputDim, layers };
}

export function documentToJson(doc: WeightDocument): string {
  return JSON.stringify(doc, null, 2) + '\n';
}
