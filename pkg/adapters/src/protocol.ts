// Shared argv handling for the markbench subprocess protocol:
//
//   <adapter> <role> --in <wav> [--ref <wav>] --out <wav> [adapter args...]
//
// Roles: embed | detect | transform | metric. Exit 0 on success; any other
// exit code marks the trial failed and the captured stderr is reported.

export const ROLES = ['embed', 'detect', 'transform', 'metric'] as const
export type Role = (typeof ROLES)[number]

export interface Invocation {
    role: Role
    inPath: string
    outPath: string | null
    refPath: string | null
    extra: Map<string, string>
}

export function parseInvocation(argv: string[]): Invocation {
    if (argv.length === 0) {
        throw new Error(`missing role; expected one of: ${ROLES.join(', ')}`)
    }
    const role = argv[0] as Role
    if (!ROLES.includes(role)) {
        throw new Error(`unknown role '${argv[0]}'; expected one of: ${ROLES.join(', ')}`)
    }
    const extra = new Map<string, string>()
    let inPath: string | null = null
    let outPath: string | null = null
    let refPath: string | null = null
    for (let i = 1; i < argv.length; i += 2) {
        const flag = argv[i]
        const value = argv[i + 1]
        if (value === undefined) {
            throw new Error(`flag ${flag} is missing a value`)
        }
        if (flag === '--in') inPath = value
        else if (flag === '--out') outPath = value
        else if (flag === '--ref') refPath = value
        else if (flag.startsWith('--')) {
            if (extra.has(flag)) {
                throw new Error(`flag ${flag} given twice; exactly one value is allowed`)
            }
            extra.set(flag, value)
        } else {
            throw new Error(`unexpected argument ${flag}`)
        }
    }
    if (inPath === null) {
        throw new Error('--in <wav> is required')
    }
    return { role, inPath, outPath, refPath, extra }
}

export function printScore(score: number): void {
    process.stdout.write(JSON.stringify({ score }) + '\n')
}

export function printMetrics(metrics: Record<string, number>): void {
    process.stdout.write(JSON.stringify({ metrics }) + '\n')
}
