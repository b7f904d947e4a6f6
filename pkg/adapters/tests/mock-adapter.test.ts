import { spawnSync } from 'node:child_process'
import * as fs from 'node:fs'
import * as os from 'node:os'
import * as path from 'node:path'

import { beforeAll, describe, expect, it } from 'vitest'

import { decodeWav, encodeWavFloat32 } from '../src/wav.js'

const ADAPTER = path.resolve(__dirname, '..', 'dist', 'mock-adapter.js')
const SKELETONS = path.resolve(__dirname, '..', 'dist', 'skeletons')

let workDir: string
let inputPath: string

function run(args: string[], env: Record<string, string> = {}) {
    return spawnSync('node', [ADAPTER, ...args], {
        encoding: 'utf-8',
        env: { ...process.env, ...env },
        timeout: 20000,
    })
}

beforeAll(() => {
    workDir = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-test-'))
    const samples = new Float64Array(16000)
    for (let i = 0; i < samples.length; i++) {
        samples[i] = Math.fround(0.2 * Math.sin((2 * Math.PI * 220 * i) / 16000))
    }
    inputPath = path.join(workDir, 'input.wav')
    fs.writeFileSync(inputPath, encodeWavFloat32({ samples, sampleRate: 16000 }))
})

describe('mock adapter', () => {
    it('echo mode copies the input byte for byte', () => {
        const out = path.join(workDir, 'echo.wav')
        const res = run(['transform', '--in', inputPath, '--out', out, '--mode', 'echo'])
        expect(res.status).toBe(0)
        expect(fs.readFileSync(out)).toEqual(fs.readFileSync(inputPath))
    })

    it('tone_embed adds a -40 dB 1 kHz tone', () => {
        const out = path.join(workDir, 'tone.wav')
        const res = run(['embed', '--in', inputPath, '--out', out, '--mode', 'tone_embed'])
        expect(res.status).toBe(0)
        const before = decodeWav(fs.readFileSync(inputPath))
        const after = decodeWav(fs.readFileSync(out))
        expect(after.samples.length).toBe(before.samples.length)
        let diffPower = 0
        for (let i = 0; i < after.samples.length; i++) {
            diffPower += (after.samples[i] - before.samples[i]) ** 2
        }
        const rms = Math.sqrt(diffPower / after.samples.length)
        // a -40 dB sine has rms 0.01 / sqrt(2)
        expect(rms).toBeGreaterThan(0.005)
        expect(rms).toBeLessThan(0.01)
    })

    it('score_const prints exactly the configured score', () => {
        const res = run(['detect', '--in', inputPath, '--out', '/dev/null',
                         '--mode', 'score_const', '--score', '0.7'])
        expect(res.status).toBe(0)
        expect(JSON.parse(res.stdout)).toEqual({ score: 0.7 })
    })

    it('score_energy reports the input rms', () => {
        const res = run(['detect', '--in', inputPath, '--out', '/dev/null', '--mode', 'score_energy'])
        expect(res.status).toBe(0)
        const { score } = JSON.parse(res.stdout)
        expect(score).toBeGreaterThan(0.13)
        expect(score).toBeLessThan(0.15) // 0.2 / sqrt(2)
    })

    it('fail mode exits 3 with a stderr message', () => {
        const res = run(['transform', '--in', inputPath, '--out', '/dev/null', '--mode', 'fail'])
        expect(res.status).toBe(3)
        expect(res.stderr).toContain('model missing')
    })

    it('rejects unknown modes and duplicate flags', () => {
        const bad = run(['transform', '--in', inputPath, '--out', '/dev/null', '--mode', 'nope'])
        expect(bad.status).toBe(1)
        const dup = run(['transform', '--in', inputPath, '--out', '/dev/null',
                         '--mode', 'echo', '--mode', 'echo'])
        expect(dup.status).toBe(1)
        expect(dup.stderr).toContain('exactly one')
    })

    it('prints the contract with --help', () => {
        const res = run(['--help'])
        expect(res.status).toBe(0)
        expect(res.stdout).toContain('--mode')
        expect(res.stdout).toContain('exit 0 = success')
    })
})

describe('skeleton adapters', () => {
    const cases = [
        ['neural-codec-adapter.js', 'transform', 'CODEC_MODEL_DIR'],
        ['denoiser-adapter.js', 'transform', 'DENOISER_MODEL_DIR'],
        ['watermark-adapter.js', 'embed', 'WATERMARK_MODEL_DIR'],
        ['speech-metrics-adapter.js', 'metric', 'SPEECH_METRIC_MODEL_DIR'],
    ] as const

    for (const [script, role, envVar] of cases) {
        it(`${script} exits 2 with install guidance when no model is configured`, () => {
            const args = [path.join(SKELETONS, script), role, '--in', inputPath,
                          '--out', path.join(workDir, 'skel.wav')]
            if (role === 'metric') args.push('--ref', inputPath)
            const env = { ...process.env }
            delete (env as Record<string, string | undefined>)[envVar]
            const res = spawnSync('node', args, { encoding: 'utf-8', env, timeout: 20000 })
            expect(res.status).toBe(2)
            expect(res.stderr).toContain('model not installed')
            expect(res.stderr).toContain(envVar)
        })

        it(`${script} emits protocol-conformant output when the model path is set`, () => {
            const out = path.join(workDir, `skel-${script}.wav`)
            const args = [path.join(SKELETONS, script), role, '--in', inputPath, '--out', out]
            if (role === 'metric') args.push('--ref', inputPath)
            const res = spawnSync('node', args, {
                encoding: 'utf-8',
                env: { ...process.env, [envVar]: workDir },
                timeout: 20000,
            })
            expect(res.status).toBe(0)
            if (role === 'metric') {
                expect(JSON.parse(res.stdout)).toHaveProperty('metrics')
            } else {
                expect(decodeWav(fs.readFileSync(out)).samples.length).toBe(16000)
            }
        })

        it(`${script} prints its contract with --help`, () => {
            const res = spawnSync('node', [path.join(SKELETONS, script), '--help'], {
                encoding: 'utf-8',
                timeout: 20000,
            })
            expect(res.status).toBe(0)
            expect(res.stdout).toContain('usage:')
            expect(res.stdout).toContain('exit codes')
        })
    }
})
