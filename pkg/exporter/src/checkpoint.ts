import * as tf from '@tensorflow/tfjs';
import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { dirname, join } from 'node:path';

// Disk layout matches what tf.loadLayersModel('file://...') expects from a
// saved layers model: model.json with a weightsManifest plus binary shards.
// Plain @tensorflow/tfjs ships no Node file handler, hence these two.

interface WeightsGroup {
  paths: string[];
  weights: tf.io.WeightsManifestEntry[];
}

function toArrayBuffer(data: tf.io.WeightData | undefined): ArrayBuffer {
  if (data === undefined) {
    throw new Error('model has no weight data');
  }
  const parts = Array.isArray(data) ? data : [data];
  const total = parts.reduce((n, p) => n + p.byteLength, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const part of parts) {
    out.set(new Uint8Array(part), offset);
    offset += part.byteLength;
  }
  return out.buffer;
}

/** Save a model as model.json + weights.bin under `dir`. */
export async function saveCheckpoint(model: tf.LayersModel, dir: string): Promise<void> {
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      mkdirSync(dir, { recursive: true });
      const weightData = toArrayBuffer(artifacts.weightData);
      writeFileSync(join(dir, 'weights.bin'), Buffer.from(weightData));
      const manifest: WeightsGroup[] = [
        { paths: ['weights.bin'], weights: artifacts.weightSpecs ?? [] },
      ];
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy ?? null,
        weightsManifest: manifest,
      };
      writeFileSync(join(dir, 'model.json'), JSON.stringify(modelJson));
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } };
    }),
  );
}

/** Load a checkpoint written by saveCheckpoint or any TF.js file save. */
export async function loadCheckpoint(modelJsonPath: string): Promise<tf.LayersModel> {
  const dir = dirname(modelJsonPath);
  const modelJson = JSON.parse(readFileSync(modelJsonPath, 'utf8'));
  const manifest: WeightsGroup[] = modelJson.weightsManifest ?? [];
  const weightSpecs = manifest.flatMap((group) => group.weights);
  const shards = manifest.flatMap((group) => group.paths).map((p) => readFileSync(join(dir, p)));
  const weightData = toArrayBuffer(shards.map((b) => b.buffer.slice(b.byteOffset, b.byteOffset + b.byteLength) as ArrayBuffer));
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: modelJson.modelTopology,
      weightSpecs,
      weightData,
    }),
  );
}
