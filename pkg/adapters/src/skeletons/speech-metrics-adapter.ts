#!/usr/bin/env node
// Skeleton: wrap model-based quality metrics (ASR character error rate,
// speaker-embedding similarity, predicted MOS) as a markbench metric plugin.
//
// The bench passes the watermarked-before audio as --ref and the transformed
// audio as --in; the adapter prints one JSON object with every metric it
// computed. Metric names become report columns.
//
// Wire-up example (markbench plan):
//   "metrics": {"proxies": true, "plugins": {
//       "speech": {"executable": "adapters/dist/skeletons/speech-metrics-adapter.js",
//                  "timeout": 600}}}

import * as fs from 'node:fs'

import { parseInvocation, printMetrics } from '../protocol.js'
import { decodeWav } from '../wav.js'

const HELP = `speech metrics adapter (skeleton)

usage: speech-metrics-adapter.js metric --in transformed.wav --ref reference.wav --out ignored.wav

environment:
  SPEECH_METRIC_MODEL_DIR   directory with ASR/speaker/MOS checkpoints (required)

prints {"metrics": {"asr_cer": ..., "sim": ..., "mos": ...}} on stdout.
exit codes: 0 success, 2 model not installed, 1 usage/protocol error
`

function main(argv: string[]): number {
    if (argv.includes('--help') || argv.includes('-h')) {
        process.stdout.write(HELP)
        return 0
    }
    const inv = parseInvocation(argv)
    if (inv.role !== 'metric' || !inv.refPath) {
        process.stderr.write('this adapter implements the metric role and needs --ref\n')
        return 1
    }

    const modelDir = process.env.SPEECH_METRIC_MODEL_DIR
    if (!modelDir || !fs.existsSync(modelDir)) {
        process.stderr.write(
            'model not installed: set SPEECH_METRIC_MODEL_DIR to the directory with ' +
                'the ASR, speaker-embedding, and MOS checkpoints\n'
        )
        return 2
    }

    const test = decodeWav(fs.readFileSync(inv.inPath))
    const ref = decodeWav(fs.readFileSync(inv.refPath))

    // --- model inference goes here ---------------------------------------
    // const cer = characterErrorRate(asr.transcribe(ref), asr.transcribe(test))
    // const sim = cosine(spk.embed(ref), spk.embed(test))
    // const mos = mosPredictor.score(test, /* non-matching reference */ ref)
    // ----------------------------------------------------------------------
    process.stderr.write(
        `skeleton: emitting placeholder metrics for ${test.samples.length} vs ` +
            `${ref.samples.length} samples\n`
    )
    printMetrics({ asr_cer: 0.0, sim: 1.0, mos: 5.0 })
    return 0
}

try {
    process.exit(main(process.argv.slice(2)))
} catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : String(err)}\n`)
    process.exit(1)
}
