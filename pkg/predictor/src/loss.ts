/**
 * Masked L2 objective: mean squared error over the cells the mask keeps.
 * Cells outside the mask contribute nothing, so predictions there are
 * unconstrained by training.
 */

import * as tf from '@tensorflow/tfjs';

/** Mean of (pred - target)^2 over mask==1 cells; 0 when the mask is empty. */
export function maskedL2(pred: tf.Tensor, target: tf.Tensor,
                         mask: tf.Tensor): tf.Scalar {
  return tf.tidy(() => {
    const m = mask.cast('float32');
    const count = m.sum();
    const sq = pred.sub(target).square().mul(m).sum();
    const zero = tf.scalar(0);
    const safeCount = count.maximum(tf.scalar(1));
    const mean = sq.div(safeCount);
    return tf.where(count.greater(zero), mean, zero).asScalar();
  });
}

export function maskedRmse(pred: tf.Tensor, target: tf.Tensor,
                           mask: tf.Tensor): number {
  const loss = maskedL2(pred, target, mask);
  const value = Math.sqrt(loss.dataSync()[0]);
  loss.dispose();
  return value;
}

/** Warn-once helper for degenerate all-masked batches. */
export function maskIsEmpty(mask: tf.Tensor): boolean {
  const total = mask.sum().dataSync()[0];
  return total === 0;
}
